"""Indexed in-memory triple store."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Iterator

from .terms import BlankNode, Iri, Literal, Node, Triple


def _nested():
    return defaultdict(lambda: defaultdict(set))


class Graph:
    """A set of triples with SPO, POS and OSP permutation indexes.

    ``prefixes`` is carried along for serialization only; it has no
    effect on graph equality.
    """

    def __init__(self, triples: Iterable[Triple] = (), prefixes: dict[str, str] | None = None):
        self.prefixes: dict[str, str] = dict(prefixes or {})
        self._triples: set[Triple] = set()
        self._spo = _nested()
        self._pos = _nested()
        self._osp = _nested()
        for t in triples:
            self.add(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._triples

    def __repr__(self) -> str:
        return f"<Graph with {len(self)} triples>"

    def add(self, triple: Triple | tuple) -> bool:
        t = Triple(*triple).check()
        if t in self._triples:
            return False
        s, p, o = t
        self._triples.add(t)
        self._spo[s][p].add(o)
        self._pos[p][o].add(s)
        self._osp[o][s].add(p)
        return True

    def remove(self, triple: Triple | tuple) -> bool:
        t = Triple(*triple)
        if t not in self._triples:
            return False
        s, p, o = t
        self._triples.discard(t)
        _drop(self._spo, s, p, o)
        _drop(self._pos, p, o, s)
        _drop(self._osp, o, s, p)
        return True

    def update(self, triples: Iterable[Triple]) -> None:
        for t in triples:
            self.add(t)

    def copy(self) -> "Graph":
        return Graph(self._triples, self.prefixes)

    def triples(self) -> list[Triple]:
        """All triples in deterministic order."""
        return sorted(self._triples, key=Triple.sort_key)

    def match(self, s: Node | None = None, p: Node | None = None, o: Node | None = None) -> list[Triple]:
        """Triples matching every bound position, sorted deterministically."""
        return sorted(self._iter_match(s, p, o), key=Triple.sort_key)

    def _iter_match(self, s, p, o) -> Iterator[Triple]:
        if s is not None:
            by_p = self._spo.get(s)
            if not by_p:
                return
            if p is not None:
                objs = by_p.get(p, ())
                if o is not None:
                    if o in objs:
                        yield Triple(s, p, o)
                    return
                for obj in objs:
                    yield Triple(s, p, obj)
                return
            if o is not None:
                for pred in self._osp.get(o, {}).get(s, ()):
                    yield Triple(s, pred, o)
                return
            for pred, objs in by_p.items():
                for obj in objs:
                    yield Triple(s, pred, obj)
            return
        if p is not None:
            by_o = self._pos.get(p)
            if not by_o:
                return
            if o is not None:
                for subj in by_o.get(o, ()):
                    yield Triple(subj, p, o)
                return
            for obj, subjs in by_o.items():
                for subj in subjs:
                    yield Triple(subj, p, obj)
            return
        if o is not None:
            for subj, preds in self._osp.get(o, {}).items():
                for pred in preds:
                    yield Triple(subj, pred, o)
            return
        yield from self._triples

    # convenience lookups used by the higher layers

    def objects(self, s: Node, p: Iri) -> list[Node]:
        return [t.object for t in self.match(s, p, None)]

    def subjects(self, p: Iri, o: Node) -> list[Node]:
        return [t.subject for t in self.match(None, p, o)]

    def value(self, s: Node, p: Iri) -> Node | None:
        objs = self.objects(s, p)
        return objs[0] if objs else None

    def nodes(self) -> set[Node]:
        return set(self._spo) | set(self._osp)

    def has_node(self, node: Node) -> bool:
        return node in self._spo or node in self._osp

    def blank_nodes(self) -> set[BlankNode]:
        return {n for n in self.nodes() if isinstance(n, BlankNode)}

    def merge(self, other: "Graph") -> None:
        """Add ``other``'s triples, renaming its blank nodes apart from ours."""
        ours = {b.label for b in self.blank_nodes()}
        rename: dict[BlankNode, BlankNode] = {}
        counter = 0
        for b in sorted(other.blank_nodes(), key=lambda b: b.label):
            label = b.label
            while label in ours:
                counter += 1
                label = f"{b.label}_{counter}"
            ours.add(label)
            rename[b] = BlankNode(label)
        for s, p, o in other:
            self.add((rename.get(s, s), p, rename.get(o, o)))
        for k, v in other.prefixes.items():
            self.prefixes.setdefault(k, v)

    def check_indexes(self) -> bool:
        """True iff all three indexes agree with the triple set."""
        def flatten(index, order):
            out = set()
            for a, inner in index.items():
                for b, cs in inner.items():
                    for c in cs:
                        out.add(order(a, b, c))
            return out

        spo = flatten(self._spo, lambda s, p, o: Triple(s, p, o))
        pos = flatten(self._pos, lambda p, o, s: Triple(s, p, o))
        osp = flatten(self._osp, lambda o, s, p: Triple(s, p, o))
        return spo == pos == osp == self._triples


def _drop(index, a, b, c) -> None:
    inner = index[a]
    inner[b].discard(c)
    if not inner[b]:
        del inner[b]
    if not inner:
        del index[a]


def is_literal(node: Node) -> bool:
    return isinstance(node, Literal)
