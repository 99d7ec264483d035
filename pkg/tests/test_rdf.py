from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cco_forge.rdf import (
    BlankNode,
    Graph,
    Iri,
    Literal,
    RelativeIriError,
    Triple,
    TurtleError,
    UndefinedPrefixError,
    compare_graphs,
    load_turtle,
    match_triples,
    parse_turtle,
    serialize_turtle,
)
from cco_forge.rdf.terms import RDF_LANGSTRING, XSD_BOOLEAN, XSD_DECIMAL, XSD_INTEGER, XSD_STRING
from cco_forge.registry import seed_graph, seed_path

from strategies import graphs, triples

EX = "http://ex.org/"


def ex(name: str) -> Iri:
    return Iri(EX + name)


# terms

def test_iri_must_be_absolute():
    with pytest.raises(ValueError):
        Iri("relative/path")
    assert Iri("urn:x").value == "urn:x"


def test_language_tag_forces_langstring():
    lit = Literal("colour", language="EN-GB")
    assert lit.datatype == RDF_LANGSTRING
    assert lit.language == "en-gb"
    with pytest.raises(ValueError):
        Literal("x", XSD_DECIMAL, language="en")
    with pytest.raises(ValueError):
        Literal("x", RDF_LANGSTRING)


def test_triple_positions_checked():
    with pytest.raises(TypeError):
        Graph([Triple(Literal("x"), ex("p"), ex("o"))])
    with pytest.raises(TypeError):
        Graph([Triple(ex("s"), BlankNode("p"), ex("o"))])


# parsing

def test_minimal_document():
    g = parse_turtle("@prefix ex: <http://ex.org/> . ex:a ex:p ex:b .")
    assert g.triples() == [Triple(ex("a"), ex("p"), ex("b"))]
    assert g.prefixes["ex"] == EX


def test_undefined_prefix_is_an_error():
    with pytest.raises(UndefinedPrefixError) as info:
        parse_turtle("ex:a ex:p ex:b .")
    assert info.value.line == 1 and info.value.column == 1


def test_relative_iri_needs_base():
    with pytest.raises(RelativeIriError):
        parse_turtle("<a> <http://ex.org/p> <b> .")
    g = parse_turtle("@base <http://ex.org/> . <a> <p> <b> .")
    assert g.triples() == [Triple(ex("a"), ex("p"), ex("b"))]


def test_sparql_style_directives():
    g = parse_turtle("PREFIX ex: <http://ex.org/>\nBASE <http://ex.org/>\nex:a <p> 'x' .")
    assert len(g) == 1


def test_syntax_error_reports_line_and_column():
    with pytest.raises(TurtleError) as info:
        parse_turtle("@prefix ex: <http://ex.org/> .\nex:a ex:p ex:b ;\n  ex:q .\n")
    assert (info.value.line, info.value.column) == (3, 8)


@pytest.mark.parametrize(
    "doc",
    [
        "@prefix ex: <http://ex.org/> . ex:a ex:p ( ex:b ex:c ) .",
        '@prefix ex: <http://ex.org/> . ex:a ex:p """long""" .',
    ],
)
def test_unsupported_constructs_raise(doc):
    with pytest.raises(TurtleError):
        parse_turtle(doc)


def test_twelve_triple_fixture(fixtures):
    # hand count: 4 + 3 + 3 for the named nodes, 2 inside the anonymous node
    g = load_turtle(fixtures / "twelve.ttl")
    assert len(g) == 12
    tokens = [t.object for t in g.match(p=Iri("http://www.ontologyrepository.com/CommonCoreOntologies/is_tokenized_by"))]
    assert tokens == [Literal("1250", XSD_DECIMAL)]
    assert len(g.blank_nodes()) == 1
    labels = {t.object for t in g.match(s=Iri("http://example.org/car1"), p=Iri("http://www.w3.org/2000/01/rdf-schema#label"))}
    assert labels == {Literal("car one", language="en"), Literal("Wagen eins", language="de")}


def test_numeric_and_boolean_shorthand():
    g = parse_turtle("@prefix ex: <http://ex.org/> . ex:a ex:p 12, -1.5, 2e3, true .")
    assert {t.object for t in g} == {
        Literal("12", XSD_INTEGER),
        Literal("-1.5", XSD_DECIMAL),
        Literal("2e3", "http://www.w3.org/2001/XMLSchema#double"),
        Literal("true", XSD_BOOLEAN),
    }


def test_literal_equality_is_lexical():
    g = parse_turtle('@prefix ex: <http://ex.org/> . ex:a ex:p 1.0, 1.00 .')
    assert len(g) == 2


def test_string_escapes_round_trip():
    g = Graph([Triple(ex("a"), ex("p"), Literal('he said "hi"\n\tback\\slash'))])
    assert compare_graphs(parse_turtle(serialize_turtle(g)), g)


# serialization

def test_empty_graph_serializes_to_prefixes_only():
    text = serialize_turtle(Graph())
    lines = [ln for ln in text.splitlines() if ln.strip()]
    assert lines and all(ln.startswith("@prefix") for ln in lines)
    assert len(parse_turtle(text)) == 0


def test_single_triple_round_trip():
    g = Graph([Triple(ex("a"), ex("p"), ex("b"))])
    assert compare_graphs(parse_turtle(serialize_turtle(g)), g)


def test_seed_serialization_is_byte_stable():
    g = load_turtle(seed_path("registry.ttl"))
    assert 300 <= len(g) <= 600
    assert serialize_turtle(g) == serialize_turtle(g)
    assert compare_graphs(parse_turtle(serialize_turtle(g)), g)


def test_serialization_reuses_prefixes():
    text = serialize_turtle(seed_graph())
    assert "@prefix cco:" in text and "cco:Truck" in text


@settings(max_examples=60, deadline=None)
@given(graphs())
def test_round_trip_property(g):
    again = parse_turtle(serialize_turtle(g))
    assert compare_graphs(again, g)
    assert compare_graphs(parse_turtle(serialize_turtle(again)), g)


@settings(max_examples=40, deadline=None)
@given(st.lists(triples(), max_size=40), st.randoms(use_true_random=False))
def test_insertion_order_does_not_change_output(items, rnd):
    shuffled = list(items)
    rnd.shuffle(shuffled)
    assert serialize_turtle(Graph(items)) == serialize_turtle(Graph(shuffled))


# store and matching

def test_match_on_empty_graph():
    assert match_triples(Graph()) == []


def test_match_by_subject_and_literal():
    lit = Literal("1250")
    g = Graph(
        [
            Triple(ex("truck1"), ex("p"), ex("a")),
            Triple(ex("truck1"), ex("q"), lit),
            Triple(ex("truck1"), ex("q"), ex("b")),
            Triple(ex("truck2"), ex("q"), lit),
            Triple(ex("truck2"), ex("q"), Literal("1250", XSD_DECIMAL)),
        ]
    )
    assert len(match_triples(g, s=ex("truck1"))) == 3
    assert {t.subject for t in match_triples(g, o=lit)} == {ex("truck1"), ex("truck2")}


def _scan(g: Graph, s, p, o) -> list[Triple]:
    return sorted(
        (t for t in g if (s is None or t.subject == s) and (p is None or t.predicate == p) and (o is None or t.object == o)),
        key=Triple.sort_key,
    )


@settings(max_examples=60, deadline=None)
@given(graphs(max_size=500), st.data())
def test_match_equals_linear_scan(g, data):
    pool = g.triples() or [Triple(ex("s"), ex("p"), ex("o"))]
    probe = data.draw(st.sampled_from(pool))
    for mask in itertools.product([False, True], repeat=3):
        s, p, o = (term if bound else None for term, bound in zip(probe, mask))
        assert match_triples(g, s, p, o) == _scan(g, s, p, o)


@settings(max_examples=60, deadline=None)
@given(st.lists(triples(), max_size=60), st.lists(st.integers(0, 59), max_size=30))
def test_indexes_agree_after_updates(items, removals):
    g = Graph(items)
    for i in removals:
        if i < len(items):
            g.remove(items[i])
    assert g.check_indexes()
    assert len(g) == len(set(g))


def test_add_is_idempotent():
    g = Graph()
    t = Triple(ex("a"), ex("p"), ex("b"))
    assert g.add(t) and not g.add(t)
    assert len(g) == 1


# isomorphism

def test_compare_identity_and_relabeling():
    g = parse_turtle("@prefix ex: <http://ex.org/> . _:x ex:p ex:a . _:x ex:q _:y .")
    h = parse_turtle("@prefix ex: <http://ex.org/> . _:m ex:p ex:a . _:m ex:q _:n .")
    assert compare_graphs(g, g)
    assert compare_graphs(g, h)


def test_compare_detects_missing_triple():
    g = parse_turtle("@prefix ex: <http://ex.org/> . ex:a ex:p ex:b, ex:c .")
    h = g.copy()
    h.remove(g.triples()[0])
    assert not compare_graphs(g, h)


def test_compare_needs_backtracking():
    # two 3-cycles against one 6-cycle: colour refinement alone cannot tell them apart
    def ring(edges):
        return Graph([Triple(BlankNode(a), Iri(EX + "p"), BlankNode(b)) for a, b in edges])

    two = ring([("a", "b"), ("b", "c"), ("c", "a"), ("d", "e"), ("e", "f"), ("f", "d")])
    six = ring([("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f"), ("f", "a")])
    assert not compare_graphs(two, six)
    relabeled = ring([("x", "y"), ("y", "z"), ("z", "x"), ("u", "v"), ("v", "w"), ("w", "u")])
    assert compare_graphs(two, relabeled)


def _brute_isomorphic(a: Graph, b: Graph) -> bool:
    ba, bb = sorted(a.blank_nodes(), key=str), sorted(b.blank_nodes(), key=str)
    if len(a) != len(b) or len(ba) != len(bb):
        return False
    target = set(b)
    for perm in itertools.permutations(bb):
        mapping = dict(zip(ba, perm))
        mapped = {Triple(*(mapping.get(x, x) for x in t)) for t in a}
        if mapped == target:
            return True
    return False


small_bnode_graphs = st.lists(
    st.builds(
        Triple,
        st.integers(0, 3).map(lambda i: BlankNode(f"b{i}")),
        st.sampled_from([Iri(EX + "p"), Iri(EX + "q")]),
        st.one_of(st.integers(0, 3).map(lambda i: BlankNode(f"b{i}")), st.sampled_from([ex("a"), Literal("v")])),
    ),
    max_size=8,
).map(Graph)


@settings(max_examples=150, deadline=None)
@given(small_bnode_graphs, small_bnode_graphs, st.permutations([f"c{i}" for i in range(4)]))
def test_compare_matches_permutation_oracle(a, b, names):
    assert compare_graphs(a, b) == _brute_isomorphic(a, b)
    rename = {BlankNode(f"b{i}"): BlankNode(n) for i, n in enumerate(names)}
    renamed = Graph([Triple(*(rename.get(x, x) for x in t)) for t in a])
    assert compare_graphs(a, renamed)


def test_merge_keeps_blank_nodes_apart():
    g = parse_turtle("@prefix ex: <http://ex.org/> . _:b ex:p ex:a .")
    h = parse_turtle("@prefix ex: <http://ex.org/> . _:b ex:p ex:c .")
    g.merge(h)
    assert len(g.blank_nodes()) == 2
