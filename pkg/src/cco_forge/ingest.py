"""CSV ingestion: vehicle track logs and sensor readings to pattern-conformant graphs."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .patterns import Binding, IdMinter, bind, instantiate
from .rdf import Graph, Iri, Literal, Node, Triple
from .rdf.namespaces import BFO, CCO, DEFAULT_PREFIXES, FORGE, RDF_TYPE, expand_curie
from .rdf.terms import XSD_DATETIME
from .registry import Taxonomy, seed_taxonomy
from .stasis import (
    ChangeEvent,
    RangeSpec,
    Sample,
    StasisSegment,
    TimeSeries,
    detect_changes,
    detect_stasis,
    emit_change_graph,
    emit_stasis_graph,
)
from .temporal import TemporalError, TimeInstant
from .units import INTERVAL, RATIO, UnitError, UnitRegistry, seed_units

TRACK_COLUMNS = ("vehicle_id", "timestamp", "lat", "lon", "region_label")
SENSOR_COLUMNS = ("subject_id", "quality_curie", "timestamp", "value", "unit_curie")

OCCUPIES = Iri(BFO + "occupies_temporal_region")
TEMPORAL_INSTANT = Iri(BFO + "TemporalInstant")
DATETIME_VALUE = Iri(FORGE + "datetime_value")
ORIGINAL_OFFSET = Iri(FORGE + "original_offset")
VEHICLE = Iri(CCO + "Vehicle")

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


class IngestError(ValueError):
    """Malformed input, reported with its 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _read_rows(path: Path, columns: tuple[str, ...]) -> list[tuple[int, dict[str, str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = [h.strip() for h in (reader.fieldnames or [])]
        missing = [c for c in columns if c not in header]
        if missing:
            raise IngestError(f"header lacks column(s) {', '.join(missing)}; expected {','.join(columns)}", 1)
        reader.fieldnames = header
        rows = []
        for row in reader:
            if None in row or any(row[c] is None for c in columns):
                raise IngestError(f"expected {len(header)} fields", reader.line_num)
            if not any((v or "").strip() for v in row.values()):
                continue
            rows.append((reader.line_num, {c: row[c].strip() for c in columns}))
    return rows


def _decimal_text(text: str, what: str, line: int, lo: Decimal | None = None, hi: Decimal | None = None) -> str:
    if not _DECIMAL.match(text):
        raise IngestError(f"{what} {text!r} is not a decimal number", line)
    value = Decimal(text)
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        raise IngestError(f"{what} {text} is outside [{lo}, {hi}]", line)
    return text.lstrip("+")


def _instant(text: str, line: int) -> TimeInstant:
    try:
        return TimeInstant.parse(text)
    except TemporalError as exc:
        raise IngestError(str(exc), line) from None


def instant_triples(node: Iri, instant: TimeInstant) -> list[Triple]:
    triples = [
        Triple(node, RDF_TYPE, TEMPORAL_INSTANT),
        Triple(node, DATETIME_VALUE, Literal(instant.isoformat(), XSD_DATETIME)),
    ]
    if instant.offset is not None and instant.offset != "+00:00":
        triples.append(Triple(node, ORIGINAL_OFFSET, Literal(instant.offset)))
    return triples


@dataclass(frozen=True)
class TrackPoint:
    line: int
    vehicle_id: str
    at: TimeInstant
    lat: str
    lon: str
    region_label: str


@dataclass
class TrackResult:
    graph: Graph
    points: list[TrackPoint]
    vehicles: dict[str, Iri]
    acts: dict[str, Iri]
    point_iris: list[Iri]
    regions: dict[str, Iri]
    minted: int = 0


def read_track(path: Path) -> list[TrackPoint]:
    points = []
    seen: dict[tuple[str, TimeInstant], int] = {}
    for line, row in _read_rows(Path(path), TRACK_COLUMNS):
        if not row["vehicle_id"]:
            raise IngestError("vehicle_id is empty", line)
        if not row["region_label"]:
            raise IngestError("region_label is empty", line)
        at = _instant(row["timestamp"], line)
        key = (row["vehicle_id"], at)
        if key in seen:
            raise IngestError(
                f"duplicate reading for vehicle {row['vehicle_id']} at {at} (first on line {seen[key]})", line
            )
        seen[key] = line
        lat = _decimal_text(row["lat"], "lat", line, Decimal(-90), Decimal(90))
        lon = _decimal_text(row["lon"], "lon", line, Decimal(-180), Decimal(180))
        points.append(TrackPoint(line, row["vehicle_id"], at, lat, lon, row["region_label"]))
    return points


def ingest_track(
    path: Path,
    minter: IdMinter,
    vehicle_class: Iri = VEHICLE,
    taxonomy: Taxonomy | None = None,
) -> TrackResult:
    """One act of vehicle use per vehicle and one TRACK expansion per row."""
    taxonomy = taxonomy or seed_taxonomy()
    points = read_track(path)
    graph = Graph(prefixes=DEFAULT_PREFIXES)
    result = TrackResult(graph, points, {}, {}, [], {})
    minted: set[Node] = set()
    for pt in points:
        vehicle = result.vehicles.get(pt.vehicle_id)
        if vehicle is None:
            vehicle = minter.mint("vehicle", pt.vehicle_id)
            result.vehicles[pt.vehicle_id] = vehicle
            graph.add(Triple(vehicle, RDF_TYPE, vehicle_class))
            graph.add(Triple(vehicle, Iri(DEFAULT_PREFIXES["rdfs"] + "label"), Literal(pt.vehicle_id)))
            minted.add(vehicle)
        observed = Literal(pt.at.isoformat(), XSD_DATETIME)
        binding = Binding.of(
            types={"vehicle": vehicle_class},
            vehicle=vehicle,
            latitude=pt.lat,
            longitude=pt.lon,
            region_label=pt.region_label,
            observed_at=observed,
        )
        env = bind("TRACK", binding, minter, taxonomy)
        graph.update(instantiate("TRACK", binding, minter, taxonomy))
        instant = minter.mint("temporal-instant", pt.at.isoformat(), pt.at.offset or "")
        graph.add(Triple(env["move"], OCCUPIES, instant))
        graph.update(instant_triples(instant, pt.at))
        result.acts[pt.vehicle_id] = env["act"]
        result.regions[pt.region_label] = env["region"]
        result.point_iris.append(env["point"])
        minted.update((env["act"], env["move"], env["point"], env["region"], instant))
    result.minted = len(minted)
    return result


@dataclass(frozen=True)
class SensorRow:
    line: int
    subject_id: str
    quality: Iri
    at: TimeInstant
    value: Decimal | None
    unit: Iri | None


@dataclass
class SeriesResult:
    subject_id: str
    series: TimeSeries
    segments: list[StasisSegment]
    events: list[ChangeEvent]
    stasis_iris: list[Iri] = field(default_factory=list)
    change_iris: list[Iri] = field(default_factory=list)


@dataclass
class SensorResult:
    graph: Graph
    series: list[SeriesResult]

    @property
    def segment_count(self) -> int:
        return sum(len(s.segments) for s in self.series)

    @property
    def event_count(self) -> int:
        return sum(len(s.events) for s in self.series)


def _curie(text: str, what: str, line: int) -> Iri:
    try:
        return expand_curie(text, DEFAULT_PREFIXES)
    except ValueError as exc:
        raise IngestError(f"{what}: {exc}", line) from None


def read_sensor(path: Path) -> list[SensorRow]:
    rows = []
    for line, row in _read_rows(Path(path), SENSOR_COLUMNS):
        if not row["subject_id"]:
            raise IngestError("subject_id is empty", line)
        if not row["quality_curie"]:
            raise IngestError("quality_curie is empty", line)
        value = None
        if row["value"]:
            value = Decimal(_decimal_text(row["value"], "value", line))
            if not row["unit_curie"]:
                raise IngestError("a value needs a unit_curie", line)
        unit = _curie(row["unit_curie"], "unit_curie", line) if row["unit_curie"] else None
        rows.append(
            SensorRow(line, row["subject_id"], _curie(row["quality_curie"], "quality_curie", line),
                      _instant(row["timestamp"], line), value, unit)
        )
    return rows


def build_series(
    rows: list[SensorRow],
    minter: IdMinter,
    units: UnitRegistry,
    taxonomy: Taxonomy,
    kind: str | None = None,
) -> list[tuple[str, TimeSeries]]:
    """Group rows into one series per (subject, quality class), ordered by subject id."""
    groups: dict[tuple[str, Iri], list[SensorRow]] = {}
    for r in rows:
        groups.setdefault((r.subject_id, r.quality), []).append(r)
    out = []
    for (subject_id, quality_cls), members in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        if not taxonomy.is_class(quality_cls):
            raise IngestError(f"quality class {quality_cls.value} is not registered", members[0].line)
        members.sort(key=lambda r: r.at)
        for a, b in zip(members, members[1:]):
            if a.at == b.at:
                raise IngestError(f"duplicate reading for {subject_id} at {b.at} (also line {a.line})", b.line)
        samples = []
        for r in members:
            try:
                unit = units.get(r.unit) if r.unit is not None else None
            except (UnitError, KeyError):
                raise IngestError(f"unknown unit {r.unit.value}", r.line) from None
            samples.append(Sample(r.at, r.value, unit))
        if not any(s.present for s in samples):
            raise IngestError(f"series for {subject_id} has no values", members[0].line)
        series_kind = kind or (INTERVAL if any(s.present and s.unit.offset != 0 for s in samples) else RATIO)
        bearer = minter.mint("subject", subject_id)
        quality = minter.mint("quality", subject_id, quality_cls.value)
        try:
            series = TimeSeries(quality, bearer, series_kind, samples, quality_cls)
        except (UnitError, ValueError) as exc:
            raise IngestError(f"{subject_id}: {exc}", members[0].line) from None
        out.append((subject_id, series))
    return out


def ingest_sensor(
    path: Path,
    minter: IdMinter,
    rng: RangeSpec | None = None,
    epsilon=0,
    min_samples: int = 1,
    policy: str = "mean",
    kind: str | None = None,
    units: UnitRegistry | None = None,
    taxonomy: Taxonomy | None = None,
) -> SensorResult:
    """Stasis and change fragments for every series in a sensor CSV.

    ``epsilon`` is in base units; without ``rng`` only changes are detected.
    """
    units = units or seed_units()
    taxonomy = taxonomy or seed_taxonomy()
    rows = read_sensor(path)
    if not rows:
        raise IngestError("no readings in sensor file")
    graph = Graph(prefixes=DEFAULT_PREFIXES)
    results = []
    for subject_id, series in build_series(rows, minter, units, taxonomy, kind):
        segments = detect_stasis(series, rng, min_samples) if rng is not None else []
        events = detect_changes(series, epsilon)
        res = SeriesResult(subject_id, series, segments, events)
        graph.add(Triple(series.bearer, Iri(DEFAULT_PREFIXES["rdfs"] + "label"), Literal(subject_id)))
        for seg in segments:
            frag = emit_stasis_graph(seg, series, minter, policy, taxonomy)
            res.stasis_iris.extend(frag.subjects(RDF_TYPE, Iri(CCO + "Stasis")))
            graph.update(frag)
        for ev in events:
            frag = emit_change_graph(ev, series, minter, taxonomy)
            res.change_iris.extend(frag.subjects(Iri(BFO + "has_participant"), series.quality))
            graph.update(frag)
        results.append(res)
    return SensorResult(graph, results)
