"""Turtle parsing, serialization and an indexed triple store."""

from .compare import compare_graphs
from .graph import Graph
from .terms import BlankNode, Iri, Literal, Node, Triple
from .turtle import (
    RelativeIriError,
    TurtleError,
    UndefinedPrefixError,
    load_turtle,
    parse_turtle,
    serialize_turtle,
)


def match_triples(graph: Graph, s: Node | None = None, p: Node | None = None, o: Node | None = None) -> list[Triple]:
    return graph.match(s, p, o)


__all__ = [
    "BlankNode",
    "Graph",
    "Iri",
    "Literal",
    "Node",
    "RelativeIriError",
    "Triple",
    "TurtleError",
    "UndefinedPrefixError",
    "compare_graphs",
    "load_turtle",
    "match_triples",
    "parse_turtle",
    "serialize_turtle",
]
