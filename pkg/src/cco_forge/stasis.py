"""Stasis and change detection over measurement time series, with graph emission."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

from .patterns import Binding, IdMinter, instantiate
from .rdf import Graph, Iri, Literal, Node, Triple
from .rdf.namespaces import BFO, CCO, RDF_TYPE
from .rdf.terms import XSD_DATETIME
from .registry import Taxonomy, UnknownTermError, seed_taxonomy
from .temporal import TimeInstant, TimeInterval
from .units import INTERVAL, RATIO, DimensionMismatch, UnitDef, format_decimal, to_decimal, to_fraction

INCREASE = "increase"
DECREASE = "decrease"
GAIN = "gain"
LOSS = "loss"

POLICIES = ("mean", "min", "max", "first")

SDC = Iri(BFO + "SpecificallyDependentContinuant")
GDC = Iri(BFO + "GenericallyDependentContinuant")
INHERES_IN = Iri(BFO + "inheres_in")

ICE_BY_KIND = {
    RATIO: Iri(CCO + "RatioMeasurementInformationContentEntity"),
    INTERVAL: Iri(CCO + "IntervalMeasurementInformationContentEntity"),
}


class SeriesError(ValueError):
    pass


@dataclass(frozen=True)
class Sample:
    at: TimeInstant
    value: Decimal | None
    unit: UnitDef | None = None

    @property
    def present(self) -> bool:
        return self.value is not None

    def base(self) -> Fraction:
        return self.unit.to_base(self.value)


@dataclass(frozen=True)
class TimeSeries:
    """Samples of one quality of one bearer; ``value=None`` means not borne then.

    ``quality_type`` is the registered class of the quality and decides the
    SDC/GDC branch of emitted change classes.
    """

    quality: Node
    bearer: Node
    kind: str
    samples: tuple[Sample, ...]
    quality_type: Iri | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.kind not in (RATIO, INTERVAL):
            raise SeriesError(f"kind must be {RATIO!r} or {INTERVAL!r}, got {self.kind!r}")
        for a, b in zip(self.samples, self.samples[1:]):
            if not a.at < b.at:
                raise SeriesError(f"sample instants must strictly increase: {a.at} then {b.at}")
        if any(s.present and s.unit is None for s in self.samples):
            raise SeriesError("every present sample needs a unit")
        dims = {s.unit.dimension for s in self.samples if s.present}
        if len(dims) > 1:
            raise DimensionMismatch(f"series mixes dimensions: {', '.join(sorted(dims))}")

    @property
    def dimension(self) -> str | None:
        for s in self.samples:
            if s.present:
                return s.unit.dimension
        return None


@dataclass(frozen=True)
class RangeSpec:
    lo: Decimal
    hi: Decimal
    unit: UnitDef

    def __post_init__(self) -> None:
        if to_fraction(self.lo) > to_fraction(self.hi):
            raise SeriesError(f"range is empty: {self.lo} > {self.hi}")

    def base_bounds(self) -> tuple[Fraction, Fraction]:
        return self.unit.to_base(self.lo), self.unit.to_base(self.hi)


@dataclass(frozen=True)
class StasisSegment:
    interval: TimeInterval
    sample_count: int
    first_index: int = field(default=0, compare=False)

    @property
    def indices(self) -> range:
        return range(self.first_index, self.first_index + self.sample_count)


@dataclass(frozen=True)
class ChangeEvent:
    kind: str
    at: TimeInterval
    magnitude: Decimal | None = None


def in_range_flags(series: TimeSeries, rng: RangeSpec) -> list[bool]:
    dim = series.dimension
    if dim is not None and dim != rng.unit.dimension:
        raise DimensionMismatch(f"range is in {rng.unit.dimension}, series is {dim}")
    lo, hi = rng.base_bounds()
    return [s.present and lo <= s.base() <= hi for s in series.samples]


def detect_stasis(series: TimeSeries, rng: RangeSpec, min_samples: int = 1) -> list[StasisSegment]:
    """Maximal runs of consecutive in-range samples, at least ``min_samples`` long."""
    if min_samples < 1:
        raise SeriesError("min_samples must be at least 1")
    if not series.samples:
        raise SeriesError("series is empty")
    flags = in_range_flags(series, rng)
    segments = []
    i, n = 0, len(flags)
    while i < n:
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and flags[j + 1]:
            j += 1
        count = j - i + 1
        if count >= min_samples:
            span = TimeInterval(series.samples[i].at, series.samples[j].at)
            segments.append(StasisSegment(span, count, i))
        i = j + 1
    return segments


def detect_changes(series: TimeSeries, epsilon=0) -> list[ChangeEvent]:
    """Change events between consecutive samples; ``epsilon`` is in base units."""
    eps = to_fraction(epsilon)
    if eps < 0:
        raise SeriesError("epsilon must be non-negative")
    if not series.samples:
        raise SeriesError("series is empty")
    events = []
    for a, b in zip(series.samples, series.samples[1:]):
        span = TimeInterval(a.at, b.at)
        if not a.present and b.present:
            events.append(ChangeEvent(GAIN, span))
        elif a.present and not b.present:
            events.append(ChangeEvent(LOSS, span))
        elif a.present and b.present:
            delta = b.base() - a.base()
            if delta > eps:
                events.append(ChangeEvent(INCREASE, span, to_decimal(delta)))
            elif delta < -eps:
                events.append(ChangeEvent(DECREASE, span, to_decimal(-delta)))
    return events


def representative_value(series: TimeSeries, segment: StasisSegment, policy: str = "mean") -> tuple[Decimal, UnitDef]:
    """The run's single datum, rendered in the unit of its first sample."""
    run = [series.samples[i] for i in segment.indices]
    unit = run[0].unit
    values = [unit.from_base(s.base()) for s in run]
    if policy == "mean":
        value = sum(values, Fraction(0)) / len(values)
    elif policy == "min":
        value = min(values)
    elif policy == "max":
        value = max(values)
    elif policy == "first":
        value = values[0]
    else:
        raise SeriesError(f"unknown representative-value policy {policy!r}; use one of {', '.join(POLICIES)}")
    return Decimal(format_decimal(value)), unit


def date_token(interval: TimeInterval) -> tuple[str, str]:
    """(ISO token, short display label) for the days an interval covers."""
    a, b = interval.start.value.date(), interval.end.value.date()

    def label(d) -> str:
        return f"{d.month}/{d.day}/{d.year % 100:02d}"

    if a == b:
        return a.isoformat(), label(a)
    return f"{a.isoformat()}/{b.isoformat()}", f"{label(a)}-{label(b)}"


def _datetime(instant: TimeInstant) -> Literal:
    return Literal(instant.isoformat(), XSD_DATETIME)


def _quality_extras(series: TimeSeries, taxonomy: Taxonomy | None) -> list[Triple]:
    # generically dependent entities do not inhere, so only type those
    taxonomy = taxonomy or seed_taxonomy()
    qt = series.quality_type
    extras = []
    if qt is None or qt not in taxonomy or taxonomy.is_subclass_of(qt, SDC):
        extras.append(Triple(series.quality, INHERES_IN, series.bearer))
    if qt is not None:
        extras.append(Triple(series.quality, RDF_TYPE, qt))
    return extras


def stasis_binding(segment: StasisSegment, series: TimeSeries, policy: str = "mean") -> Binding:
    value, unit = representative_value(series, segment, policy)
    token, label = date_token(segment.interval)
    return Binding.of(
        quality=series.quality,
        ice_class=ICE_BY_KIND[series.kind],
        value=value,
        unit=unit.iri,
        date_token=token,
        date_label=label,
        start=_datetime(segment.interval.start),
        end=_datetime(segment.interval.end),
    )


def emit_stasis_graph(
    segment: StasisSegment,
    series: TimeSeries,
    minter: IdMinter,
    policy: str = "mean",
    taxonomy: Taxonomy | None = None,
) -> Graph:
    graph = instantiate("STASIS", stasis_binding(segment, series, policy), minter, taxonomy)
    graph.update(_quality_extras(series, taxonomy))
    return graph


def change_class(kind: str, quality_type: Iri | None, taxonomy: Taxonomy | None = None) -> Iri:
    """The change subclass for an event kind and the dependent entity's lineage."""
    taxonomy = taxonomy or seed_taxonomy()
    if quality_type is None or quality_type not in taxonomy:
        raise UnknownTermError(quality_type)
    if taxonomy.is_subclass_of(quality_type, SDC):
        branch = "SpecificallyDependentContinuant"
    elif taxonomy.is_subclass_of(quality_type, GDC):
        branch = "GenericallyDependentContinuant"
    else:
        raise UnknownTermError(quality_type)
    if kind not in (INCREASE, DECREASE, GAIN, LOSS):
        raise SeriesError(f"unknown change kind {kind!r}")
    return Iri(f"{CCO}{kind.capitalize()}Of{branch}")


def emit_change_graph(
    event: ChangeEvent,
    series: TimeSeries,
    minter: IdMinter,
    taxonomy: Taxonomy | None = None,
) -> Graph:
    binding = Binding.of(
        bearer=series.bearer,
        change_class=change_class(event.kind, series.quality_type, taxonomy),
        dependent=series.quality,
        interval_label=event.at.isoformat(),
    )
    graph = instantiate("CHANGE", binding, minter, taxonomy)
    graph.update(_quality_extras(series, taxonomy))
    return graph
