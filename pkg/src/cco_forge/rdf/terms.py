"""RDF node types: IRIs, blank nodes and literals."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple, Union

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"

XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"
XSD_DATETIME = XSD + "dateTime"
RDF_LANGSTRING = RDF + "langString"

_SCHEME = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:")


@dataclass(frozen=True, slots=True)
class Iri:
    value: str

    def __post_init__(self) -> None:
        if not _SCHEME.match(self.value):
            raise ValueError(f"IRI is not absolute: {self.value!r}")

    def __str__(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class BlankNode:
    label: str

    def __post_init__(self) -> None:
        if not self.label:
            raise ValueError("blank node label must be non-empty")

    def __str__(self) -> str:
        return f"_:{self.label}"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: str | None = None

    def __post_init__(self) -> None:
        if self.language is not None:
            if self.datatype == XSD_STRING:
                # language given without explicit datatype
                object.__setattr__(self, "datatype", RDF_LANGSTRING)
            elif self.datatype != RDF_LANGSTRING:
                raise ValueError("language tag requires rdf:langString datatype")
            object.__setattr__(self, "language", self.language.lower())
        elif self.datatype == RDF_LANGSTRING:
            raise ValueError("rdf:langString literal needs a language tag")

    def __str__(self) -> str:
        text = self.lexical.replace("\\", "\\\\").replace('"', '\\"')
        if self.language:
            return f'"{text}"@{self.language}'
        if self.datatype == XSD_STRING:
            return f'"{text}"'
        return f'"{text}"^^<{self.datatype}>'


Node = Union[Iri, BlankNode, Literal]

_KIND_ORDER = {Iri: 0, BlankNode: 1, Literal: 2}


def node_key(node: Node) -> tuple:
    """Total sort key: IRIs, then blank nodes, then literals by lexical form."""
    if isinstance(node, Iri):
        return (0, node.value, "", "")
    if isinstance(node, BlankNode):
        return (1, node.label, "", "")
    return (2, node.lexical, node.datatype, node.language or "")


class Triple(NamedTuple):
    subject: Node
    predicate: Iri
    object: Node

    def check(self) -> "Triple":
        if isinstance(self.subject, Literal):
            raise TypeError(f"literal in subject position: {self.subject}")
        if not isinstance(self.predicate, Iri):
            raise TypeError(f"predicate must be an IRI: {self.predicate}")
        if not isinstance(self.object, (Iri, BlankNode, Literal)):
            raise TypeError(f"not an RDF node: {self.object!r}")
        return self

    def sort_key(self) -> tuple:
        return (node_key(self.subject), node_key(self.predicate), node_key(self.object))

    def __str__(self) -> str:
        return f"{self.subject} {self.predicate} {self.object} ."
