"""Parameterized triple templates: instantiation and anchored validation.

A template is a small schema of triple patterns over three sorts of
variables: *params* supplied by the caller (nodes, literals or classes),
*slots* minted fresh at instantiation, and constants.  Validation searches
for a homomorphism from the schema into a data graph, anchored at a focus
node, with ``rdf:type`` patterns matched up to subsumption.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from decimal import Decimal
from functools import lru_cache
from pathlib import Path
from typing import Union

from .rdf import BlankNode, Graph, Iri, Literal, Node, Triple
from .rdf.namespaces import DEFAULT_PREFIXES, RDF_TYPE, expand_curie, shorten
from .rdf.terms import RDF_LANGSTRING, XSD_STRING, node_key
from .registry import META_PREDICATES, Taxonomy, seed_path, seed_taxonomy

NODE = "node"
LITERAL = "literal"
CLASS = "class"

CONFORMANT = "conformant"
NONCONFORMANT = "nonconformant"

DEFAULT_BASE = "https://example.org/cco-forge"


class PatternError(ValueError):
    pass


class UnknownTemplate(PatternError):
    pass


class MissingParam(PatternError):
    pass


class TypeMismatch(PatternError):
    pass


class FocusNotFound(PatternError):
    pass


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return f"?{self.name}"


Term = Union[Var, Iri, BlankNode, Literal]


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Iri
    object: Term

    def vars(self) -> list[str]:
        return [t.name for t in (self.subject, self.object) if isinstance(t, Var)]

    def show(self) -> list[str]:
        return [_show(self.subject), _show(self.predicate), _show(self.object)]

    def __str__(self) -> str:
        return " ".join(self.show())


def _show(term: Term) -> str:
    if isinstance(term, Var):
        return str(term)
    if term == RDF_TYPE:
        return "a"
    if isinstance(term, Iri):
        return shorten(term)
    return str(term)


@dataclass(frozen=True)
class Param:
    name: str
    kind: str
    expected: Iri | None = None
    datatype: str | None = None
    key_only: bool = False


@dataclass(frozen=True)
class Slot:
    name: str
    key: tuple[str, ...] = ()


@dataclass(frozen=True)
class PatternTemplate:
    name: str
    focus: str
    params: tuple[Param, ...]
    slots: tuple[Slot, ...]
    schema: tuple[TriplePattern, ...]
    description: str = ""

    def param(self, name: str) -> Param | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    @property
    def slot_names(self) -> set[str]:
        return {s.name for s in self.slots}

    @property
    def required_types(self) -> dict[str, Iri]:
        return {p.name: p.expected for p in self.params if p.expected is not None}

    def node_vars(self) -> set[str]:
        return self.slot_names | {p.name for p in self.params if p.kind == NODE}

    def match_order(self) -> list[TriplePattern]:
        """Schema patterns ordered so each one touches an already-reached node."""
        nodes = self.node_vars()
        reached = {self.focus}
        remaining = list(self.schema)
        order = []
        while remaining:
            for pat in remaining:
                ends = [t for t in (pat.subject, pat.object) if isinstance(t, Var) and t.name in nodes]
                subj_const = not isinstance(pat.subject, Var)
                if subj_const or any(t.name in reached for t in ends):
                    order.append(pat)
                    remaining.remove(pat)
                    reached.update(t.name for t in ends)
                    break
            else:
                raise PatternError(f"{self.name}: schema is not connected to focus ?{self.focus}")
        return order

    def slot_class(self, slot: str) -> Term | None:
        for pat in self.schema:
            if pat.predicate == RDF_TYPE and pat.subject == Var(slot):
                return pat.object
        return None

    def to_dict(self) -> dict:
        def param_dict(p: Param) -> dict:
            out: dict = {"name": p.name, "kind": p.kind}
            if p.expected is not None:
                out["class"] = shorten(p.expected)
            if p.datatype is not None:
                out["datatype"] = shorten(Iri(p.datatype))
            if p.key_only:
                out["key_only"] = True
            return out

        def term(t: Term) -> str:
            if isinstance(t, Var):
                return str(t)
            if t == RDF_TYPE:
                return "a"
            if isinstance(t, Iri):
                return shorten(t)
            return str(t)

        return {
            "name": self.name,
            "description": self.description,
            "focus": self.focus,
            "params": [param_dict(p) for p in self.params],
            "slots": [{"name": s.name, "key": list(s.key)} for s in self.slots],
            "schema": [[term(p.subject), term(p.predicate), term(p.object)] for p in self.schema],
        }


# reading and checking templates

_LITERAL_TERM = re.compile(r'^"(.*)"(?:\^\^(\S+)|@([A-Za-z\-]+))?$')


def _term(text: str, prefixes: dict[str, str]) -> Term:
    if text.startswith("?"):
        return Var(text[1:])
    m = _LITERAL_TERM.match(text)
    if m:
        lexical, dt, lang = m.groups()
        if lang:
            return Literal(lexical, language=lang)
        return Literal(lexical, expand_curie(dt, prefixes).value if dt else XSD_STRING)
    return expand_curie(text, prefixes)


def template_from_dict(data: dict, prefixes: dict[str, str] | None = None) -> PatternTemplate:
    prefixes = {**DEFAULT_PREFIXES, **(prefixes or {})}
    params = []
    for p in data["params"]:
        kind = p.get("kind", NODE)
        if kind not in (NODE, LITERAL, CLASS):
            raise PatternError(f"{data['name']}: param {p['name']} has unknown kind {kind!r}")
        params.append(
            Param(
                name=p["name"],
                kind=kind,
                expected=expand_curie(p["class"], prefixes) if p.get("class") else None,
                datatype=expand_curie(p["datatype"], prefixes).value if p.get("datatype") else None,
                key_only=bool(p.get("key_only", False)),
            )
        )
    schema = []
    for s, p, o in data["schema"]:
        pred = _term(p, prefixes)
        if not isinstance(pred, Iri):
            raise PatternError(f"{data['name']}: predicate {p!r} must be a constant IRI")
        schema.append(TriplePattern(_term(s, prefixes), pred, _term(o, prefixes)))
    tpl = PatternTemplate(
        name=data["name"],
        focus=data["focus"],
        params=tuple(params),
        slots=tuple(Slot(s["name"], tuple(s.get("key", ()))) for s in data.get("slots", ())),
        schema=tuple(schema),
        description=data.get("description", ""),
    )
    _check_shape(tpl)
    return tpl


def _check_shape(tpl: PatternTemplate) -> None:
    names = [p.name for p in tpl.params] + [s.name for s in tpl.slots]
    if len(names) != len(set(names)):
        raise PatternError(f"{tpl.name}: duplicate param or slot names")
    known = set(names)
    for pat in tpl.schema:
        for v in pat.vars():
            if v not in known:
                raise PatternError(f"{tpl.name}: variable ?{v} is neither a param nor a slot")
            param = tpl.param(v)
            if param is not None and param.key_only:
                raise PatternError(f"{tpl.name}: key-only param ?{v} used in schema")
    if tpl.focus not in tpl.node_vars():
        raise PatternError(f"{tpl.name}: focus ?{tpl.focus} must be a node param or a slot")
    for slot in tpl.slots:
        if tpl.slot_class(slot.name) is None:
            raise PatternError(f"{tpl.name}: slot ?{slot.name} has no rdf:type pattern")
        for k in slot.key:
            if tpl.param(k) is None:
                raise PatternError(f"{tpl.name}: slot ?{slot.name} keyed on unknown param {k}")
    for param in tpl.params:
        if param.kind == CLASS and param.expected is None:
            raise PatternError(f"{tpl.name}: class param {param.name} needs an upper bound class")
    tpl.match_order()


def check_template(tpl: PatternTemplate, taxonomy: Taxonomy) -> list[str]:
    """Problems with the template's vocabulary against a registry (empty if fine)."""
    problems = []
    for pat in tpl.schema:
        if pat.predicate not in META_PREDICATES and pat.predicate not in taxonomy:
            problems.append(f"predicate {shorten(pat.predicate)} is not registered")
        if pat.predicate == RDF_TYPE and isinstance(pat.object, Iri) and not taxonomy.is_class(pat.object):
            problems.append(f"class {shorten(pat.object)} is not registered")
    for p in tpl.params:
        if p.expected is not None and not taxonomy.is_class(p.expected):
            problems.append(f"param {p.name}: class {shorten(p.expected)} is not registered")
    return problems


def load_templates(source) -> dict[str, PatternTemplate]:
    """Read templates from a JSON file path, JSON text, or an already-parsed dict."""
    if isinstance(source, dict):
        data = source
    elif isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
        data = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        data = json.loads(source)
    prefixes = data.get("prefixes")
    out = {}
    for entry in data["templates"]:
        tpl = template_from_dict(entry, prefixes)
        out[tpl.name] = tpl
    return out


def templates_to_json(templates) -> str:
    items = templates.values() if isinstance(templates, dict) else templates
    payload = {"format": "cco-forge-templates/1", "templates": [t.to_dict() for t in items]}
    return json.dumps(payload, indent=2) + "\n"


@lru_cache(maxsize=8)
def _builtin(path: str) -> dict[str, PatternTemplate]:
    templates = load_templates(Path(path))
    taxonomy = seed_taxonomy()
    for tpl in templates.values():
        problems = check_template(tpl, taxonomy)
        if problems:
            raise PatternError(f"{tpl.name}: " + "; ".join(problems))
    return templates


def builtin_templates() -> dict[str, PatternTemplate]:
    return dict(_builtin(str(seed_path("templates.json"))))


def get_template(template: PatternTemplate | str) -> PatternTemplate:
    if isinstance(template, PatternTemplate):
        return template
    templates = builtin_templates()
    try:
        return templates[template.upper()]
    except KeyError:
        raise UnknownTemplate(f"unknown template {template!r}; known: {', '.join(sorted(templates))}") from None


# instantiation

@dataclass(frozen=True)
class IdMinter:
    """Deterministic IRIs of the form ``<base>/<kind>/<hash of natural key>``."""

    base: str = DEFAULT_BASE
    dataset: str = "default"

    def mint(self, kind: str, *key) -> Iri:
        payload = json.dumps([self.dataset, *[str(k) for k in key]], ensure_ascii=False)
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
        return Iri(f"{self.base.rstrip('/')}/{kind}/{digest}")


@dataclass
class Binding:
    """Param values, plus optional asserted classes for node params."""

    values: dict[str, Node]
    types: dict[str, Iri] = field(default_factory=dict)

    @classmethod
    def of(cls, types: dict[str, Iri] | None = None, **values) -> "Binding":
        return cls(dict(values), dict(types or {}))


def _slug(iri: Iri) -> str:
    local = re.split(r"[/#]", iri.value)[-1]
    local = re.sub(r"(?<=[a-z0-9])(?=[A-Z])", "-", local)
    return re.sub(r"[^A-Za-z0-9]+", "-", local).strip("-").lower() or "node"


def _coerce_literal(param: Param, value) -> Literal:
    if isinstance(value, Literal):
        return value
    if isinstance(value, (str, int, Decimal)) and not isinstance(value, bool):
        return Literal(str(value), param.datatype or XSD_STRING)
    raise TypeMismatch(f"param {param.name}: expected a literal, got {value!r}")


def _datatype_ok(param: Param, lit: Literal) -> bool:
    if param.datatype is None:
        return True
    if param.datatype == XSD_STRING:
        return lit.datatype in (XSD_STRING, RDF_LANGSTRING)
    return lit.datatype == param.datatype


def _resolve_binding(tpl: PatternTemplate, binding: Binding, taxonomy: Taxonomy) -> dict[str, Node]:
    unknown = set(binding.values) - {p.name for p in tpl.params}
    if unknown:
        raise PatternError(f"{tpl.name}: unknown params {', '.join(sorted(unknown))}")
    values: dict[str, Node] = {}
    for p in tpl.params:
        if p.name not in binding.values or binding.values[p.name] is None:
            if p.key_only:
                continue
            raise MissingParam(f"{tpl.name}: param {p.name} is not bound")
        raw = binding.values[p.name]
        if p.kind == LITERAL:
            lit = _coerce_literal(p, raw)
            if not _datatype_ok(p, lit):
                raise TypeMismatch(f"{tpl.name}: param {p.name} expects datatype {shorten(Iri(p.datatype))}")
            values[p.name] = lit
        elif p.kind == CLASS:
            if not isinstance(raw, Iri) or not taxonomy.is_class(raw):
                raise TypeMismatch(f"{tpl.name}: param {p.name} must be a registered class, got {raw}")
            if not taxonomy.is_subclass_of(raw, p.expected):
                raise TypeMismatch(f"{tpl.name}: {shorten(raw)} is not a subclass of {shorten(p.expected)}")
            values[p.name] = raw
        else:
            if not isinstance(raw, (Iri, BlankNode)):
                raise TypeMismatch(f"{tpl.name}: param {p.name} must be an IRI or blank node, got {raw}")
            asserted = binding.types.get(p.name)
            if asserted is not None and p.expected is not None:
                if not taxonomy.is_class(asserted) or not taxonomy.is_subclass_of(asserted, p.expected):
                    raise TypeMismatch(
                        f"{tpl.name}: {p.name} is a {shorten(asserted)}, not a {shorten(p.expected)}"
                    )
            values[p.name] = raw
    return values


def mint_slots(tpl: PatternTemplate, values: dict[str, Node], minter: IdMinter) -> dict[str, Iri]:
    minted = {}
    for slot in tpl.slots:
        cls = tpl.slot_class(slot.name)
        cls_iri = values[cls.name] if isinstance(cls, Var) else cls
        key = [f"{k}={values[k]}" for k in slot.key if k in values]
        minted[slot.name] = minter.mint(_slug(cls_iri), tpl.name, slot.name, *key)
    return minted


def instantiate(
    template: PatternTemplate | str,
    binding: Binding,
    minter: IdMinter | None = None,
    taxonomy: Taxonomy | None = None,
) -> Graph:
    """Expand a template into a graph fragment with minted slot IRIs."""
    tpl = get_template(template)
    env = bind(tpl, binding, minter, taxonomy)
    graph = Graph(prefixes=DEFAULT_PREFIXES)
    for pat in tpl.schema:
        s, o = (env[t.name] if isinstance(t, Var) else t for t in (pat.subject, pat.object))
        graph.add(Triple(s, pat.predicate, o))
    return graph


def bind(template: PatternTemplate | str, binding: Binding, minter: IdMinter | None = None,
         taxonomy: Taxonomy | None = None) -> dict[str, Node]:
    """Every variable's value in the fragment ``instantiate`` would produce."""
    tpl = get_template(template)
    values = _resolve_binding(tpl, binding, taxonomy or seed_taxonomy())
    return {**values, **mint_slots(tpl, values, minter or IdMinter())}


def focus_of(template: PatternTemplate | str, binding: Binding, minter: IdMinter | None = None,
             taxonomy: Taxonomy | None = None) -> Node:
    """The node a fragment from ``instantiate`` is anchored at."""
    tpl = get_template(template)
    return bind(tpl, binding, minter, taxonomy)[tpl.focus]


# validation

@dataclass(frozen=True)
class MissingPattern:
    pattern: TriplePattern
    binding: tuple[tuple[str, Node], ...]

    def to_dict(self) -> dict:
        return {"pattern": self.pattern.show(), "binding": {k: str(v) for k, v in self.binding}}


@dataclass
class ConformanceReport:
    template: str
    focus: Node
    missing: list[MissingPattern] = field(default_factory=list)
    type_errors: list[str] = field(default_factory=list)
    matched: dict[str, Node] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return CONFORMANT if not self.missing and not self.type_errors else NONCONFORMANT

    @property
    def conformant(self) -> bool:
        return self.status == CONFORMANT

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "focus": getattr(self.focus, "value", str(self.focus)),
            "status": self.status,
            "missing": [m.to_dict() for m in self.missing],
            "type_errors": list(self.type_errors),
            "matched": {k: str(v) for k, v in sorted(self.matched.items())},
        }


class _Search:
    def __init__(self, tpl: PatternTemplate, data: Graph, taxonomy: Taxonomy):
        self.tpl = tpl
        self.data = data
        self.taxonomy = taxonomy
        self.order = tpl.match_order()
        self.best: tuple[list[MissingPattern], dict[str, Node]] | None = None
        self.seen: set = set()

    def types_of(self, node: Node) -> list[Iri]:
        return [t for t in self.data.objects(node, RDF_TYPE) if isinstance(t, Iri) and self.taxonomy.is_class(t)]

    def fits(self, var: str, node: Node) -> bool:
        param = self.tpl.param(var)
        if param is not None and param.kind == LITERAL:
            return isinstance(node, Literal) and _datatype_ok(param, node)
        return isinstance(node, (Iri, BlankNode))

    def candidates(self, pat: TriplePattern, env: dict[str, Node]) -> list[dict[str, Node]]:
        def val(t: Term):
            if isinstance(t, Var):
                return env.get(t.name)
            return t

        s, o = val(pat.subject), val(pat.object)
        if pat.predicate == RDF_TYPE:
            if s is None:
                raise PatternError(f"{self.tpl.name}: type pattern {pat} reached before its subject")
            types = self.types_of(s)
            if o is not None:
                return [{}] if any(self.taxonomy.is_subclass_of(t, o) for t in types if o in self.taxonomy) else []
            bound = self.tpl.param(pat.object.name).expected
            return [{pat.object.name: t} for t in sorted(types, key=node_key) if self.taxonomy.is_subclass_of(t, bound)]
        if s is not None and o is not None:
            return [{}] if Triple(s, pat.predicate, o) in self.data else []
        if s is not None:
            name = pat.object.name
            return [{name: x} for x in self.data.objects(s, pat.predicate) if self.fits(name, x)]
        if o is not None:
            name = pat.subject.name
            return [{name: x} for x in self.data.subjects(pat.predicate, o) if self.fits(name, x)]
        out = []
        for t in self.data.match(None, pat.predicate, None):
            if self.fits(pat.subject.name, t.subject) and self.fits(pat.object.name, t.object):
                out.append({pat.subject.name: t.subject, pat.object.name: t.object})
        return out

    def run(self, i: int, env: dict[str, Node], missing: list[MissingPattern], blocked: frozenset[str]) -> bool:
        """Depth-first search; returns True once a complete match is found."""
        if self.best is not None and len(missing) >= len(self.best[0]):
            return False
        memo = (i, tuple(sorted(env.items(), key=lambda kv: kv[0])), blocked, len(missing))
        if memo in self.seen:
            return False
        self.seen.add(memo)
        if i == len(self.order):
            self.best = (list(missing), dict(env))
            return not missing
        pat = self.order[i]
        names = pat.vars()
        if isinstance(pat.object, Var) and pat.predicate == RDF_TYPE:
            names = [n for n in names if n != pat.object.name] + [pat.object.name]
        if any(n in blocked for n in names):
            unbound = frozenset(n for n in names if n not in env)
            return self.run(i + 1, env, missing, blocked | unbound)
        options = self.candidates(pat, env)
        if not options:
            entry = MissingPattern(pat, tuple(sorted(env.items(), key=lambda kv: kv[0])))
            unbound = frozenset(n for n in names if n not in env)
            return self.run(i + 1, env, missing + [entry], blocked | unbound)
        for ext in options:
            if self.run(i + 1, {**env, **ext}, missing, blocked):
                return True
        return False


def validate(
    data: Graph,
    template: PatternTemplate | str,
    focus: Node,
    taxonomy: Taxonomy | None = None,
) -> ConformanceReport:
    """Check whether ``data`` holds the template's structure around ``focus``.

    Missing entries list the first failing pattern on each branch, with the
    partial binding at the point of failure; patterns that hang off an
    unmatched variable are not listed separately.  Node params are checked
    against their expected class only when the data asserts a registered
    type for them; an untyped node is not a type error.
    """
    tpl = get_template(template)
    taxonomy = taxonomy or seed_taxonomy()
    if not data.has_node(focus):
        raise FocusNotFound(f"focus {focus} does not occur in the data graph")
    search = _Search(tpl, data, taxonomy)
    if not search.fits(tpl.focus, focus):
        raise FocusNotFound(f"focus {focus} cannot fill ?{tpl.focus}")
    search.run(0, {tpl.focus: focus}, [], frozenset())
    missing, env = search.best
    report = ConformanceReport(tpl.name, focus, missing=missing, matched=env)
    for p in tpl.params:
        if p.kind != NODE or p.expected is None or p.name not in env:
            continue
        types = search.types_of(env[p.name])
        if types and not any(taxonomy.is_subclass_of(t, p.expected) for t in types):
            shown = ", ".join(sorted(shorten(t) for t in types))
            report.type_errors.append(f"?{p.name} = {env[p.name]} is typed {shown}, expected {shorten(p.expected)}")
    return report
