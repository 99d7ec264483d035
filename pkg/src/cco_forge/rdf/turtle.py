"""Turtle subset reader and deterministic writer.

Supported: ``@prefix``/``@base`` (and the SPARQL-style ``PREFIX``/``BASE``),
``a``, predicate lists, object lists, IRIREFs, prefixed names, single-line
string literals, numbers, booleans, datatypes, language tags, labeled blank
nodes and ``[ ... ]`` blank node property lists.  Collections and
triple-quoted strings are rejected with a syntax error.
"""

from __future__ import annotations

import bisect
import re
from urllib.parse import urljoin

from .graph import Graph
from .namespaces import DEFAULT_PREFIXES
from .terms import (
    RDF,
    XSD_BOOLEAN,
    XSD_DECIMAL,
    XSD_DOUBLE,
    XSD_INTEGER,
    XSD_STRING,
    BlankNode,
    Iri,
    Literal,
    Node,
    Triple,
    node_key,
)

RDF_TYPE = Iri(RDF + "type")


class TurtleError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class UndefinedPrefixError(TurtleError):
    pass


class RelativeIriError(TurtleError):
    pass


_LOCAL_ESC = r"\\[_~.\-!$&'()*+,;=/?#@%]"
_PLX = rf"(?:%[0-9A-Fa-f]{{2}}|{_LOCAL_ESC})"
_LOCAL_FIRST = rf"(?:[\w:]|{_PLX})"
_LOCAL_MID = rf"(?:[\w.:\-]|{_PLX})"
_LOCAL_LAST = rf"(?:[\w:\-]|{_PLX})"
_PN_LOCAL = rf"{_LOCAL_FIRST}(?:{_LOCAL_MID}*{_LOCAL_LAST})?"
_PN_PREFIX = r"(?:[A-Za-z](?:[\w.\-]*[\w\-])?)?"

_TOKEN = re.compile(
    rf"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<iri><[^<>"{{}}|^`\\\x00-\x20]*>)
  | (?P<bnode>_:[\w](?:[\w.\-]*[\w\-])?)
  | (?P<directive>@prefix\b|@base\b)
  | (?P<lang>@[A-Za-z]+(?:-[A-Za-z0-9]+)*)
  | (?P<long_string>\"\"\"|''')
  | (?P<string>"(?:[^"\\\n\r]|\\.)*"|'(?:[^'\\\n\r]|\\.)*')
  | (?P<double>[+-]?(?:\d+\.\d*[eE][+-]?\d+|\.\d+[eE][+-]?\d+|\d+[eE][+-]?\d+))
  | (?P<decimal>[+-]?\d*\.\d+)
  | (?P<integer>[+-]?\d+)
  | (?P<pname>{_PN_PREFIX}:(?:{_PN_LOCAL})?)
  | (?P<keyword>[A-Za-z]+)
  | (?P<datatype>\^\^)
  | (?P<punct>[.;,\[\]()])
    """,
    re.VERBOSE,
)

_ESCAPES = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_STRING_ESCAPE = re.compile(r"\\(u[0-9A-Fa-f]{4}|U[0-9A-Fa-f]{8}|.)")
_LOCAL_UNESCAPE = re.compile(r"\\(.)")


class _Token:
    __slots__ = ("kind", "text", "pos")

    def __init__(self, kind: str, text: str, pos: int):
        self.kind = kind
        self.text = text
        self.pos = pos

    def __repr__(self) -> str:
        return f"{self.kind}:{self.text!r}"


class _Parser:
    def __init__(self, text: str, base: str | None):
        self.text = text
        self.base = base
        self.prefixes: dict[str, str] = {}
        self.triples: list[Triple] = []
        self._line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
        self.tokens = self._tokenize()
        self.i = 0
        self._labels: dict[str, BlankNode] = {}
        self._anon = 0

    # lexing

    def _where(self, pos: int) -> tuple[int, int]:
        line = bisect.bisect_right(self._line_starts, pos)
        return line, pos - self._line_starts[line - 1] + 1

    def error(self, message: str, pos: int, cls=TurtleError) -> TurtleError:
        line, col = self._where(pos)
        return cls(message, line, col)

    def _tokenize(self) -> list[_Token]:
        out = []
        pos = 0
        n = len(self.text)
        while pos < n:
            m = _TOKEN.match(self.text, pos)
            if m is None or m.end() == pos:
                raise self.error(f"unexpected character {self.text[pos]!r}", pos)
            kind = m.lastgroup
            if kind == "long_string":
                raise self.error("multi-line strings are not supported", pos)
            if kind != "ws":
                out.append(_Token(kind, m.group(), pos))
            pos = m.end()
        out.append(_Token("eof", "", n))
        return out

    # token helpers

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_punct(self, char: str) -> _Token:
        tok = self.next()
        if tok.kind != "punct" or tok.text != char:
            raise self.error(f"expected '{char}' but found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def at_punct(self, char: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.text == char

    # grammar

    def parse(self) -> None:
        while self.peek().kind != "eof":
            self.statement()

    def statement(self) -> None:
        tok = self.peek()
        if tok.kind == "directive":
            self.next()
            if tok.text == "@prefix":
                self.prefix_decl()
            else:
                self.base_decl()
            self.expect_punct(".")
            return
        if tok.kind == "keyword" and tok.text.upper() in ("PREFIX", "BASE"):
            self.next()
            if tok.text.upper() == "PREFIX":
                self.prefix_decl()
            else:
                self.base_decl()
            return
        self.triples_stmt()
        self.expect_punct(".")

    def prefix_decl(self) -> None:
        tok = self.next()
        if tok.kind != "pname" or not tok.text.endswith(":") or tok.text.count(":") != 1:
            raise self.error("expected prefix name ending in ':'", tok.pos)
        iri = self.iriref(self.next())
        self.prefixes[tok.text[:-1]] = iri.value

    def base_decl(self) -> None:
        self.base = self.iriref(self.next()).value

    def triples_stmt(self) -> None:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "[":
            subject = self.blank_property_list()
            if self.at_punct("."):
                return
            self.predicate_object_list(subject)
            return
        subject = self.subject()
        self.predicate_object_list(subject)

    def subject(self) -> Node:
        tok = self.next()
        if tok.kind in ("iri", "pname"):
            return self.iri(tok)
        if tok.kind == "bnode":
            return self.labeled_bnode(tok.text[2:])
        if tok.kind == "punct" and tok.text == "(":
            raise self.error("collections are not supported", tok.pos)
        raise self.error(f"expected subject but found {tok.text or 'end of input'!r}", tok.pos)

    def predicate_object_list(self, subject: Node) -> None:
        while True:
            pred = self.verb()
            self.object_list(subject, pred)
            if not self.at_punct(";"):
                return
            while self.at_punct(";"):
                self.next()
            tok = self.peek()
            if tok.kind == "punct" and tok.text in (".", "]"):
                return

    def verb(self) -> Iri:
        tok = self.next()
        if tok.kind == "keyword" and tok.text == "a":
            return RDF_TYPE
        if tok.kind in ("iri", "pname"):
            return self.iri(tok)
        raise self.error(f"expected predicate but found {tok.text or 'end of input'!r}", tok.pos)

    def object_list(self, subject: Node, pred: Iri) -> None:
        while True:
            obj = self.object()
            self.triples.append(Triple(subject, pred, obj))
            if not self.at_punct(","):
                return
            self.next()

    def object(self) -> Node:
        tok = self.peek()
        if tok.kind == "punct" and tok.text == "[":
            return self.blank_property_list()
        self.next()
        if tok.kind in ("iri", "pname"):
            return self.iri(tok)
        if tok.kind == "bnode":
            return self.labeled_bnode(tok.text[2:])
        if tok.kind == "string":
            return self.string_literal(tok)
        if tok.kind == "integer":
            return Literal(tok.text, XSD_INTEGER)
        if tok.kind == "decimal":
            return Literal(tok.text, XSD_DECIMAL)
        if tok.kind == "double":
            return Literal(tok.text, XSD_DOUBLE)
        if tok.kind == "keyword" and tok.text in ("true", "false"):
            return Literal(tok.text, XSD_BOOLEAN)
        if tok.kind == "punct" and tok.text == "(":
            raise self.error("collections are not supported", tok.pos)
        raise self.error(f"expected object but found {tok.text or 'end of input'!r}", tok.pos)

    def blank_property_list(self) -> BlankNode:
        self.expect_punct("[")
        self._anon += 1
        node = BlankNode(f"\x00{self._anon}")
        if self.at_punct("]"):
            self.next()
            return node
        self.predicate_object_list(node)
        self.expect_punct("]")
        return node

    def string_literal(self, tok: _Token) -> Literal:
        lexical = self.unescape(tok.text[1:-1], tok.pos)
        nxt = self.peek()
        if nxt.kind == "lang":
            self.next()
            return Literal(lexical, language=nxt.text[1:])
        if nxt.kind == "datatype":
            self.next()
            dt_tok = self.next()
            if dt_tok.kind not in ("iri", "pname"):
                raise self.error("expected datatype IRI after '^^'", dt_tok.pos)
            return Literal(lexical, self.iri(dt_tok).value)
        return Literal(lexical, XSD_STRING)

    def unescape(self, body: str, pos: int) -> str:
        def repl(m: re.Match) -> str:
            esc = m.group(1)
            if esc[0] in "uU":
                return chr(int(esc[1:], 16))
            if esc in _ESCAPES:
                return _ESCAPES[esc]
            raise self.error(f"invalid escape '\\{esc}'", pos)

        return _STRING_ESCAPE.sub(repl, body)

    def labeled_bnode(self, label: str) -> BlankNode:
        node = self._labels.get(label)
        if node is None:
            node = self._labels[label] = BlankNode(label)
        return node

    def iri(self, tok: _Token) -> Iri:
        if tok.kind == "iri":
            return self.iriref(tok)
        prefix, _, local = tok.text.partition(":")
        if prefix not in self.prefixes:
            raise self.error(f"undefined prefix '{prefix}:'", tok.pos, UndefinedPrefixError)
        return Iri(self.prefixes[prefix] + _LOCAL_UNESCAPE.sub(r"\1", local))

    def iriref(self, tok: _Token) -> Iri:
        if tok.kind != "iri":
            raise self.error(f"expected IRI but found {tok.text or 'end of input'!r}", tok.pos)
        value = self.unescape(tok.text[1:-1], tok.pos)
        if re.match(r"^[A-Za-z][A-Za-z0-9+.\-]*:", value):
            return Iri(value)
        if self.base is None:
            raise self.error(f"relative IRI <{value}> with no @base", tok.pos, RelativeIriError)
        return Iri(urljoin(self.base, value))

    def finish(self) -> list[Triple]:
        """Give anonymous blank nodes stable labels that avoid document labels."""
        used = set(self._labels)
        rename: dict[BlankNode, BlankNode] = {}
        counter = 0
        for k in range(1, self._anon + 1):
            while f"b{counter}" in used:
                counter += 1
            rename[BlankNode(f"\x00{k}")] = BlankNode(f"b{counter}")
            used.add(f"b{counter}")
        return [Triple(rename.get(s, s), p, rename.get(o, o)) for s, p, o in self.triples]


def parse_turtle(text: str, base: str | None = None) -> Graph:
    """Parse a Turtle document into a Graph.

    Raises TurtleError (or its subclasses UndefinedPrefixError,
    RelativeIriError) with 1-based line and column on bad input.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    parser = _Parser(text, base)
    parser.parse()
    return Graph(parser.finish(), parser.prefixes)


def load_turtle(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return parse_turtle(fh.read())


# writing

_PN_LOCAL_SAFE = re.compile(r"^[A-Za-z0-9_](?:[A-Za-z0-9_.\-]*[A-Za-z0-9_\-])?$")


def _escape_string(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


class _Writer:
    def __init__(self, prefixes: dict[str, str]):
        self.prefixes = prefixes
        # longest namespace first so the most specific prefix wins
        self._ordered = sorted(prefixes.items(), key=lambda kv: (-len(kv[1]), kv[0]))
        self.used: set[str] = set()

    def iri(self, iri: Iri) -> str:
        for prefix, ns in self._ordered:
            if iri.value.startswith(ns):
                local = iri.value[len(ns):]
                if local == "" or _PN_LOCAL_SAFE.match(local):
                    self.used.add(prefix)
                    return f"{prefix}:{local}"
        return "<" + iri.value.replace("\\", "\\u005C").replace(">", "\\u003E") + ">"

    def node(self, node: Node) -> str:
        if isinstance(node, Iri):
            return self.iri(node)
        if isinstance(node, BlankNode):
            return f"_:{node.label}"
        text = f'"{_escape_string(node.lexical)}"'
        if node.language:
            return f"{text}@{node.language}"
        if node.datatype == XSD_STRING:
            return text
        return f"{text}^^{self.iri(Iri(node.datatype))}"

    def predicate(self, iri: Iri) -> str:
        return "a" if iri == RDF_TYPE else self.iri(iri)


def serialize_turtle(graph: Graph, prefixes: dict[str, str] | None = None) -> str:
    """Write ``graph`` as Turtle with sorted subjects, predicates and objects.

    Prefixes come from the graph (falling back to the defaults when the
    graph has none) and only those actually used by a triple are emitted,
    except for an empty graph which keeps the full prefix block.
    """
    table = dict(prefixes if prefixes is not None else (graph.prefixes or DEFAULT_PREFIXES))
    writer = _Writer(table)
    lines: list[str] = []
    body: list[str] = []
    current_s = None
    current_p = None
    for s, p, o in graph.triples():
        if s != current_s:
            if current_s is not None:
                body.append(" .\n\n")
            body.append(f"{writer.node(s)}\n    {writer.predicate(p)} {writer.node(o)}")
            current_s, current_p = s, p
        elif p != current_p:
            body.append(f" ;\n    {writer.predicate(p)} {writer.node(o)}")
            current_p = p
        else:
            body.append(f",\n        {writer.node(o)}")
    if current_s is not None:
        body.append(" .\n")
    text = "".join(body)
    used = [(k, v) for k, v in sorted(table.items()) if len(graph) == 0 or k in writer.used]
    for prefix, ns in used:
        lines.append(f"@prefix {prefix}: <{ns}> .\n")
    if body:
        lines.append("\n")
    return "".join(lines) + text

