"""Instants, gapless intervals and gappy multi-intervals on a closed-interval model.

Everything is normalized to UTC at second precision.  The offset a
timestamp was written with is kept on the instant for provenance.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Union

from .rdf import Graph, Iri, Node
from .rdf.namespaces import BFO

PART_OF = Iri(BFO + "part_of")

GRANULARITIES = ("second", "day", "month")


class TemporalError(ValueError):
    pass


def _parse_iso(text: str) -> tuple[datetime, str | None]:
    raw = text.strip()
    if raw.endswith(("Z", "z")):
        raw = raw[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError:
        raise TemporalError(f"not an ISO 8601 timestamp: {text!r}") from None
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc), None
    offset = dt.strftime("%z")
    offset = f"{offset[:3]}:{offset[3:]}" if offset else None
    return dt.astimezone(timezone.utc), offset


@dataclass(frozen=True, order=True)
class TimeInstant:
    value: datetime
    offset: str | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        v = self.value
        if v.tzinfo is None:
            v = v.replace(tzinfo=timezone.utc)
        object.__setattr__(self, "value", v.astimezone(timezone.utc).replace(microsecond=0))

    @classmethod
    def parse(cls, text: str) -> "TimeInstant":
        """Read an ISO 8601 timestamp; naive input is taken as UTC."""
        dt, offset = _parse_iso(text)
        return cls(dt, offset)

    def isoformat(self) -> str:
        return self.value.strftime("%Y-%m-%dT%H:%M:%SZ")

    def __str__(self) -> str:
        return self.isoformat()


@dataclass(frozen=True)
class TimeInterval:
    start: TimeInstant
    end: TimeInstant

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise TemporalError(f"interval ends before it starts: {self.start} > {self.end}")

    @classmethod
    def parse(cls, start: str, end: str) -> "TimeInterval":
        return cls(TimeInstant.parse(start), TimeInstant.parse(end))

    @classmethod
    def day(cls, year: int, month: int, day: int) -> "TimeInterval":
        start = datetime(year, month, day, tzinfo=timezone.utc)
        return cls(TimeInstant(start), TimeInstant(start + timedelta(days=1, seconds=-1)))

    @classmethod
    def month(cls, year: int, month: int) -> "TimeInterval":
        start = datetime(year, month, 1, tzinfo=timezone.utc)
        nxt = datetime(year + (month == 12), month % 12 + 1, 1, tzinfo=timezone.utc)
        return cls(TimeInstant(start), TimeInstant(nxt - timedelta(seconds=1)))

    @classmethod
    def months(cls, year: int, first: int, last: int) -> "TimeInterval":
        return cls(cls.month(year, first).start, cls.month(year, last).end)

    def isoformat(self) -> str:
        return f"{self.start.isoformat()}/{self.end.isoformat()}"

    def __str__(self) -> str:
        return self.isoformat()


@dataclass(frozen=True)
class MultiInterval:
    granularity: str
    segments: tuple[TimeInterval, ...] = ()

    def __post_init__(self) -> None:
        if self.granularity not in GRANULARITIES:
            raise TemporalError(f"granularity must be one of {GRANULARITIES}, got {self.granularity!r}")
        segs = tuple(self.segments)
        for a, b in zip(segs, segs[1:]):
            if not a.end < b.start:
                raise TemporalError(f"segments must be sorted and disjoint: {a} then {b}")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def from_json(cls, granularity: str, text: str) -> "MultiInterval":
        """Read a JSON array of ``[start, end]`` ISO 8601 pairs."""
        pairs = json.loads(text)
        return cls(granularity, tuple(TimeInterval.parse(a, b) for a, b in pairs))

    def to_json(self) -> str:
        return json.dumps([[s.start.isoformat(), s.end.isoformat()] for s in self.segments])

    def without(self, segment: TimeInterval) -> "MultiInterval":
        return MultiInterval(self.granularity, tuple(s for s in self.segments if s != segment))


Temporal = Union[TimeInstant, TimeInterval, MultiInterval]


def instant_inside(i: TimeInstant, v: TimeInterval) -> bool:
    return v.start <= i <= v.end


def interval_during(a: TimeInterval, b: TimeInterval) -> bool:
    return b.start <= a.start and a.end <= b.end


def multi_contains(m: MultiInterval, a: TimeInterval | TimeInstant) -> bool:
    if isinstance(a, TimeInstant):
        return any(instant_inside(a, seg) for seg in m.segments)
    return any(interval_during(a, seg) for seg in m.segments)


class Coreference(str, enum.Enum):
    COMPATIBLE = "compatible"
    INCOMPATIBLE = "incompatible"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class AnchoredAssertion:
    process: Node
    temporal: Temporal
    place: Node


def _bounds(x: Temporal) -> list[TimeInterval]:
    if isinstance(x, TimeInstant):
        return [TimeInterval(x, x)]
    if isinstance(x, TimeInterval):
        return [x]
    return list(x.segments)


def _nested(x: Temporal, y: Temporal) -> bool:
    """Some piece of one anchor lies inside a piece of the other."""
    return any(interval_during(a, b) or interval_during(b, a) for a in _bounds(x) for b in _bounds(y))


def _disjoint(x: Temporal, y: Temporal) -> bool:
    return all(a.end < b.start or b.end < a.start for a in _bounds(x) for b in _bounds(y))


def part_of_closure(data: Graph, place: Node) -> set[Node]:
    """``place`` together with everything it is (transitively) part of."""
    seen = {place}
    stack = [place]
    while stack:
        for whole in data.objects(stack.pop(), PART_OF):
            if whole not in seen:
                seen.add(whole)
                stack.append(whole)
    return seen


def _in_mereology(data: Graph, place: Node) -> bool:
    return bool(data.match(place, PART_OF, None) or data.match(None, PART_OF, place))


def coreference_compatible(x: AnchoredAssertion, y: AnchoredAssertion, data: Graph) -> Coreference:
    """Could two anchored observations describe the same event?

    Temporally disjoint anchors rule it out.  Otherwise nested anchors plus
    places linked by part-of (either way, reflexively) make it compatible.
    Places that both sit in the asserted part-of hierarchy without being
    linked are incompatible; anything less asserted stays unknown.
    """
    for place in (x.place, y.place):
        if not data.has_node(place):
            raise TemporalError(f"place {place} does not occur in the data graph")
    if _disjoint(x.temporal, y.temporal):
        return Coreference.INCOMPATIBLE
    related = y.place in part_of_closure(data, x.place) or x.place in part_of_closure(data, y.place)
    if related:
        return Coreference.COMPATIBLE if _nested(x.temporal, y.temporal) else Coreference.UNKNOWN
    if _in_mereology(data, x.place) and _in_mereology(data, y.place):
        return Coreference.INCOMPATIBLE
    return Coreference.UNKNOWN
