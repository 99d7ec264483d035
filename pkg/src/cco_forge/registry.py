"""Curated BFO/CCO term registry with subsumption and structural checks."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .rdf import Graph, Iri, Literal, Node, parse_turtle
from .rdf.terms import node_key
from .rdf.namespaces import (
    BFO,
    FORGE,
    OWL,
    OWL_ANNOTATION_PROPERTY,
    OWL_CLASS,
    OWL_OBJECT_PROPERTY,
    RDF_TYPE,
    RDFS,
    RDFS_COMMENT,
    RDFS_LABEL,
    RDFS_SUBCLASS_OF,
    RDFS_SUBPROPERTY_OF,
    SKOS_DEFINITION,
)
from .report import BAD_PREDICATE_KIND, CYCLE, DISJOINT_TYPES, UNKNOWN_TERM, ViolationReport

CLASS = "class"
OBJECT_RELATION = "object-relation"
ANNOTATION_RELATION = "annotation-relation"

MODULES = frozenset(
    {
        "bfo",
        "geospatial",
        "information-entity",
        "event",
        "time",
        "agent",
        "quality",
        "units-of-measure",
        "currency-unit",
        "facility",
        "artifact",
        "extended-relations",
    }
)

ROOT = Iri(BFO + "Entity")
FORGE_MODULE = Iri(FORGE + "module")
OWL_DISJOINT_WITH = Iri(OWL + "disjointWith")

_KIND_BY_TYPE = {
    OWL_CLASS: CLASS,
    OWL_OBJECT_PROPERTY: OBJECT_RELATION,
    OWL_ANNOTATION_PROPERTY: ANNOTATION_RELATION,
}


def bfo(name: str) -> Iri:
    return Iri(BFO + name)


DEFAULT_DISJOINT_PAIRS = frozenset(
    frozenset(pair)
    for pair in [
        (bfo("Continuant"), bfo("Occurrent")),
        (bfo("IndependentContinuant"), bfo("SpecificallyDependentContinuant")),
        (bfo("IndependentContinuant"), bfo("GenericallyDependentContinuant")),
        (bfo("SpecificallyDependentContinuant"), bfo("GenericallyDependentContinuant")),
        (bfo("MaterialEntity"), bfo("ImmaterialEntity")),
    ]
)

# predicates and types that belong to the registry/unit vocabularies rather
# than to the curated terms; instance checks never flag them
META_PREDICATES = frozenset(
    {
        RDF_TYPE,
        RDFS_LABEL,
        RDFS_COMMENT,
        RDFS_SUBCLASS_OF,
        RDFS_SUBPROPERTY_OF,
        SKOS_DEFINITION,
        FORGE_MODULE,
        OWL_DISJOINT_WITH,
        Iri(FORGE + "dimension"),
        Iri(FORGE + "scale"),
        Iri(FORGE + "offset"),
        Iri(FORGE + "symbol"),
    }
)
META_TYPES = frozenset(
    {
        OWL_CLASS,
        OWL_OBJECT_PROPERTY,
        OWL_ANNOTATION_PROPERTY,
        Iri(OWL + "NamedIndividual"),
        Iri(OWL + "Ontology"),
        Iri(OWL + "Thing"),
        Iri(RDFS + "Class"),
    }
)


class RegistryError(ValueError):
    def __init__(self, code: str, focus: Iri | None, message: str):
        super().__init__(message)
        self.code = code
        self.focus = focus


class UnknownTermError(KeyError):
    code = UNKNOWN_TERM

    def __init__(self, iri):
        super().__init__(str(getattr(iri, "value", iri)))
        self.iri = iri

    def __str__(self) -> str:
        return f"unknown term: {self.args[0]}"


@dataclass(frozen=True)
class TermEntry:
    iri: Iri
    label: str
    kind: str
    parents: frozenset[Iri]
    module: str
    definition: str = ""


@dataclass
class Taxonomy:
    entries: dict[Iri, TermEntry]
    disjoint_pairs: frozenset = DEFAULT_DISJOINT_PAIRS
    _anc: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __contains__(self, iri: Iri) -> bool:
        return iri in self.entries

    def __getitem__(self, iri: Iri) -> TermEntry:
        try:
            return self.entries[iri]
        except KeyError:
            raise UnknownTermError(iri) from None

    def __len__(self) -> int:
        return len(self.entries)

    def kind_of(self, iri: Iri) -> str | None:
        entry = self.entries.get(iri)
        return entry.kind if entry else None

    def is_class(self, iri: Node) -> bool:
        return self.kind_of(iri) == CLASS

    def ancestors(self, iri: Iri) -> frozenset[Iri]:
        """Reflexive-transitive parent closure; safe on cyclic input."""
        cached = self._anc.get(iri)
        if cached is not None:
            return cached
        seen = {iri}
        stack = [iri]
        while stack:
            entry = self.entries.get(stack.pop())
            if entry is None:
                continue
            for parent in entry.parents:
                if parent not in seen:
                    seen.add(parent)
                    stack.append(parent)
        result = frozenset(seen)
        self._anc[iri] = result
        return result

    def is_subclass_of(self, a: Iri, b: Iri) -> bool:
        if a not in self.entries:
            raise UnknownTermError(a)
        if b not in self.entries:
            raise UnknownTermError(b)
        return b in self.ancestors(a)

    def descendants(self, iri: Iri) -> set[Iri]:
        return {e for e in self.entries if iri in self.ancestors(e)}

    def by_label(self, label: str) -> Iri:
        for entry in self.entries.values():
            if entry.label == label:
                return entry.iri
        raise UnknownTermError(label)

    def disjoint_violations(self, types) -> list[frozenset]:
        """Disjoint pairs both of whose members subsume some type in ``types``."""
        lineage: set[Iri] = set()
        for t in types:
            lineage |= self.ancestors(t)
        return sorted(
            (pair for pair in self.disjoint_pairs if pair <= lineage),
            key=lambda pair: sorted(x.value for x in pair),
        )


def is_subclass_of(t: Taxonomy, a: Iri, b: Iri) -> bool:
    """Reflexive-transitive subsumption; raises UnknownTermError for unregistered IRIs."""
    return t.is_subclass_of(a, b)


def _text(graph: Graph, s: Iri, p: Iri) -> str | None:
    values = [o for o in graph.objects(s, p) if isinstance(o, Literal)]
    if not values:
        return None
    # prefer English, then untagged, then anything
    values.sort(key=lambda lit: (lit.language not in ("en", None), lit.language is not None, lit.lexical))
    return values[0].lexical


def load_registry(graph: Graph, strict: bool = True) -> Taxonomy:
    """Build a Taxonomy from registry-vocabulary triples.

    Terms are the IRI subjects typed owl:Class, owl:ObjectProperty or
    owl:AnnotationProperty.  Parents come from rdfs:subClassOf and
    rdfs:subPropertyOf (blank-node restrictions are ignored); the module
    comes from ``forge:module``.  With ``strict`` the structure must also be
    sound: no cycles, no dangling parents, and every class reaches ``entity``.
    """
    entries: dict[Iri, TermEntry] = {}
    for type_iri, kind in _KIND_BY_TYPE.items():
        for subject in graph.subjects(RDF_TYPE, type_iri):
            if not isinstance(subject, Iri):
                continue
            if subject in entries and entries[subject].kind != kind:
                raise RegistryError(BAD_PREDICATE_KIND, subject, f"{subject.value} declared with two kinds")
            parent_pred = RDFS_SUBCLASS_OF if kind == CLASS else RDFS_SUBPROPERTY_OF
            parents = frozenset(o for o in graph.objects(subject, parent_pred) if isinstance(o, Iri))
            module = _text(graph, subject, FORGE_MODULE)
            if module not in MODULES:
                raise RegistryError(UNKNOWN_TERM, subject, f"{subject.value}: unknown module {module!r}")
            entries[subject] = TermEntry(
                iri=subject,
                label=_text(graph, subject, RDFS_LABEL) or subject.value,
                kind=kind,
                parents=parents,
                module=module,
                definition=_text(graph, subject, SKOS_DEFINITION) or "",
            )
    pairs = set(DEFAULT_DISJOINT_PAIRS)
    for s, _, o in graph.match(None, OWL_DISJOINT_WITH, None):
        if isinstance(s, Iri) and isinstance(o, Iri):
            pairs.add(frozenset((s, o)))
    taxonomy = Taxonomy(entries, frozenset(pairs))
    if strict:
        report = check_taxonomy(taxonomy)
        structural = [v for v in report.violations if v.code != DISJOINT_TYPES]
        if structural:
            first = structural[0]
            raise RegistryError(first.code, Iri(first.focus), first.message)
    return taxonomy


def check_taxonomy(t: Taxonomy) -> ViolationReport:
    """Structural consistency: cycles, dangling parents, orphans, disjointness."""
    report = ViolationReport()
    on_cycle = set()
    for iri in sorted(t.entries, key=lambda i: i.value):
        entry = t.entries[iri]
        for parent in sorted(entry.parents, key=lambda i: i.value):
            if parent not in t.entries:
                report.add(UNKNOWN_TERM, iri, f"parent {parent.value} is not registered")
            elif t.entries[parent].kind != entry.kind:
                report.add(BAD_PREDICATE_KIND, iri, f"parent {parent.value} is a {t.entries[parent].kind}, not a {entry.kind}")
        if any(iri in t.ancestors(p) for p in entry.parents):
            on_cycle.add(iri)
            report.add(CYCLE, iri, f"{entry.label} is its own ancestor")
    for iri in sorted(t.entries, key=lambda i: i.value):
        entry = t.entries[iri]
        if entry.kind != CLASS:
            continue
        lineage = t.ancestors(iri)
        if ROOT not in lineage and iri not in on_cycle and all(p in t.entries for p in entry.parents):
            report.add(UNKNOWN_TERM, iri, f"{entry.label} has no path to {ROOT.value}")
        for pair in t.disjoint_violations([iri]):
            names = " / ".join(sorted(t.entries[x].label if x in t.entries else x.value for x in pair))
            report.add(DISJOINT_TYPES, iri, f"{entry.label} falls under disjoint classes {names}")
    return report


def check_instances(t: Taxonomy, data: Graph) -> ViolationReport:
    """Typing, disjointness and vocabulary checks over instance data.

    Missing optional structure is never a violation.
    """
    report = ViolationReport()
    typed: dict[Node, list[Iri]] = {}
    for s, _, o in data.match(None, RDF_TYPE, None):
        typed.setdefault(s, []).append(o)

    for subject in sorted(typed, key=node_key):
        known = []
        for cls in sorted(typed[subject], key=node_key):
            if cls in META_TYPES:
                continue
            kind = t.kind_of(cls)
            if kind is None:
                report.add(UNKNOWN_TERM, cls, f"type {_show(cls)} of {_show(subject)} is not registered")
            elif kind != CLASS:
                report.add(BAD_PREDICATE_KIND, subject, f"{_show(cls)} is a {kind}, used as a type")
            else:
                known.append(cls)
        for pair in t.disjoint_violations(known):
            names = " / ".join(sorted(t.entries[x].label for x in pair))
            report.add(DISJOINT_TYPES, subject, f"{_show(subject)} is typed into disjoint lineages {names}")

    seen_unknown = set()
    for s, p, o in data.triples():
        if p in META_PREDICATES:
            continue
        kind = t.kind_of(p)
        if kind is None:
            if p not in seen_unknown:
                seen_unknown.add(p)
                report.add(UNKNOWN_TERM, p, f"predicate {_show(p)} is not registered")
        elif kind == CLASS:
            report.add(BAD_PREDICATE_KIND, s, f"class {_show(p)} used as a predicate")
        elif kind == OBJECT_RELATION and isinstance(o, Literal):
            report.add(BAD_PREDICATE_KIND, s, f"object relation {_show(p)} has literal object {o}")
        elif kind == ANNOTATION_RELATION and o in typed:
            report.add(BAD_PREDICATE_KIND, s, f"annotation {_show(p)} links two individuals; use an object relation")
    return report


def _show(node: Node) -> str:
    return node.value if isinstance(node, Iri) else str(node)


# seed data

SEED_DIR_ENV = "CCO_FORGE_SEED_DIR"


def seed_path(name: str) -> Path:
    """Location of a shipped seed file, honouring ``CCO_FORGE_SEED_DIR``."""
    override = os.environ.get(SEED_DIR_ENV)
    if override and (Path(override) / name).exists():
        return Path(override) / name
    return Path(str(resources.files("cco_forge") / "data" / name))


@lru_cache(maxsize=8)
def _seed_graph(path: str) -> Graph:
    return parse_turtle(Path(path).read_text(encoding="utf-8"))


def seed_graph() -> Graph:
    return _seed_graph(str(seed_path("registry.ttl"))).copy()


@lru_cache(maxsize=8)
def _seed_taxonomy(path: str) -> Taxonomy:
    return load_registry(_seed_graph(path))


def seed_taxonomy() -> Taxonomy:
    """The shipped registry, loaded once per seed location."""
    return _seed_taxonomy(str(seed_path("registry.ttl")))
