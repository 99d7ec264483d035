"""Graph equality up to blank node relabeling."""

from __future__ import annotations

from collections import Counter, defaultdict

from .graph import Graph
from .terms import BlankNode, Node, Triple, node_key

_SELF = (0,)


def _incident(triples: list[Triple]) -> dict[BlankNode, list[Triple]]:
    out: dict[BlankNode, list[Triple]] = defaultdict(list)
    for t in triples:
        if isinstance(t.subject, BlankNode):
            out[t.subject].append(t)
        if isinstance(t.object, BlankNode) and t.object != t.subject:
            out[t.object].append(t)
    return out


def _encode(term: Node, me: BlankNode, colors: dict[BlankNode, int]):
    if term == me:
        return _SELF
    if isinstance(term, BlankNode):
        return (1, colors[term])
    return (2,) + node_key(term)


def _refine(incident: dict[BlankNode, list[Triple]], colors: dict[BlankNode, int]) -> dict[BlankNode, int]:
    """Iterate neighbourhood hashing until the partition stops splitting."""
    n_classes = len(set(colors.values()))
    while True:
        new = {}
        for b, c in colors.items():
            sig = sorted(
                (_encode(t.subject, b, colors), node_key(t.predicate), _encode(t.object, b, colors))
                for t in incident.get(b, ())
            )
            new[b] = hash((c, tuple(sig)))
        n_new = len(set(new.values()))
        colors = new
        if n_new == n_classes:
            return colors
        n_classes = n_new


def compare_graphs(a: Graph, b: Graph) -> bool:
    """True iff some bijection between blank nodes makes the triple sets equal."""
    if len(a) != len(b):
        return False
    ground_a, loose_a = _split(a)
    ground_b, loose_b = _split(b)
    if ground_a != ground_b:
        return False
    if not loose_a:
        return not loose_b
    bn_a = a.blank_nodes()
    bn_b = b.blank_nodes()
    if len(bn_a) != len(bn_b):
        return False
    inc_a = _incident(loose_a)
    inc_b = _incident(loose_b)
    target = set(loose_b)
    col_a = _refine(inc_a, {x: 0 for x in bn_a})
    col_b = _refine(inc_b, {x: 0 for x in bn_b})
    return _search(inc_a, inc_b, col_a, col_b, loose_a, target)


def _split(g: Graph) -> tuple[set[Triple], list[Triple]]:
    ground, loose = set(), []
    for t in g:
        if isinstance(t.subject, BlankNode) or isinstance(t.object, BlankNode):
            loose.append(t)
        else:
            ground.add(t)
    return ground, loose


def _search(inc_a, inc_b, col_a, col_b, loose_a, target) -> bool:
    count_a = Counter(col_a.values())
    if count_a != Counter(col_b.values()):
        return False
    ties = [c for c, k in count_a.items() if k > 1]
    if not ties:
        by_color = {c: x for x, c in col_b.items()}
        mapping = {x: by_color[c] for x, c in col_a.items()}
        mapped = {Triple(mapping.get(s, s), p, mapping.get(o, o)) for s, p, o in loose_a}
        return mapped == target
    # split the smallest tied class; ties broken by label for determinism
    tie = min(ties, key=lambda c: (count_a[c], c))
    pick = min((x for x, c in col_a.items() if c == tie), key=lambda x: x.label)
    marker = hash(("pick", tie))
    for cand in sorted((y for y, c in col_b.items() if c == tie), key=lambda y: y.label):
        next_a = dict(col_a)
        next_b = dict(col_b)
        next_a[pick] = marker
        next_b[cand] = marker
        if _search(inc_a, inc_b, _refine(inc_a, next_a), _refine(inc_b, next_b), loose_a, target):
            return True
    return False
