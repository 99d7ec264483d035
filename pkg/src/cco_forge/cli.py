"""The ``cco-forge`` command: ingestion, validation, checking, conversion and export.

Every command prints a JSON run report on stdout and a one-line summary on
stderr.  Exit codes: 0 clean, 1 violations or nonconformance, 2 usage or
input errors.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

from .ingest import IngestError, SensorResult, TrackResult, ingest_sensor, ingest_track
from .patterns import FocusNotFound, IdMinter, PatternError, builtin_templates, get_template, templates_to_json, validate
from .rdf import Graph, TurtleError, load_turtle, serialize_turtle
from .rdf.namespaces import DEFAULT_PREFIXES, expand_curie
from .registry import (
    SEED_DIR_ENV,
    RegistryError,
    UnknownTermError,
    check_instances,
    check_taxonomy,
    load_registry,
    seed_graph,
    seed_path,
    seed_taxonomy,
)
from .stasis import POLICIES, RangeSpec
from .temporal import TemporalError
from .units import INTERVAL, RATIO, UnitError, convert, format_decimal, seed_units, to_fraction

OK, VIOLATIONS, USAGE = 0, 1, 2

CONFIG_KEYS = {"base_iri", "dataset", "seed_dir", "policy", "min_samples", "vehicle_class"}
DEFAULTS = {"base_iri": "https://example.org/cco-forge", "dataset": "default", "policy": "mean", "min_samples": 1,
            "vehicle_class": "cco:Vehicle"}

INPUT_ERRORS = (IngestError, TurtleError, RegistryError, UnitError, PatternError, TemporalError, UnknownTermError,
                OSError, ValueError)


@dataclass
class RunReport:
    command: str
    inputs: list[str]
    exit_code: int = OK
    counts: dict = field(default_factory=dict)
    violations: list[dict] = field(default_factory=list)
    conformance: list[dict] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    result: dict = field(default_factory=dict)

    def fail(self, message: str, code: int = USAGE) -> "RunReport":
        self.errors.append(message)
        self.exit_code = max(self.exit_code, code)
        return self

    def to_dict(self) -> dict:
        out = {"command": self.command, "inputs": self.inputs, "exit_code": self.exit_code, "counts": self.counts}
        for key in ("violations", "conformance", "errors", "outputs", "result"):
            if getattr(self, key):
                out[key] = getattr(self, key)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def summary(self) -> str:
        status = {OK: "ok", VIOLATIONS: "violations", USAGE: "error"}[self.exit_code]
        parts = [f"{k}={v}" for k, v in self.counts.items()]
        text = f"{self.command}: {status}" + (f" ({', '.join(parts)})" if parts else "")
        for err in self.errors:
            text += f"\n  error: {err}"
        return text


def _minter(opts: dict) -> IdMinter:
    return IdMinter(opts["base_iri"], opts["dataset"])


def _write_turtle(graph: Graph, out: str | None, report: RunReport) -> None:
    text = serialize_turtle(graph)
    if out is None:
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    Path(out).write_text(text, encoding="utf-8")
    report.outputs.append(out)


def _write_csv(path: str, header: list[str], rows: list[list], report: RunReport) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    report.outputs.append(path)


def _instance_check(graph: Graph, report: RunReport) -> None:
    found = check_instances(seed_taxonomy(), graph)
    report.violations.extend(v.to_dict() for v in found.sorted().violations)
    if not found.ok:
        report.exit_code = max(report.exit_code, VIOLATIONS)


def cmd_ingest_track(csv_path: str, base_iri: str | None = None, out_path: str | None = None, *,
                     dataset: str = "default", vehicle_class: str = "cco:Vehicle", figure: str | None = None,
                     summary: str | None = None) -> RunReport:
    report = RunReport("ingest-track", [csv_path])
    try:
        minter = IdMinter(base_iri or DEFAULTS["base_iri"], dataset)
        cls = expand_curie(vehicle_class, DEFAULT_PREFIXES)
        taxonomy = seed_taxonomy()
        if not taxonomy.is_class(cls) or not taxonomy.is_subclass_of(cls, expand_curie("cco:Vehicle")):
            return report.fail(f"vehicle class {vehicle_class} is not a registered subclass of cco:Vehicle")
        result: TrackResult = ingest_track(Path(csv_path), minter, cls, taxonomy)
    except INPUT_ERRORS as exc:
        return report.fail(str(exc))
    graph = result.graph
    for vehicle_id, vehicle in sorted(result.vehicles.items()):
        conf = validate(graph, "TRACK", vehicle)
        report.conformance.append(conf.to_dict())
        if not conf.conformant:
            report.exit_code = VIOLATIONS
    _instance_check(graph, report)
    report.counts = {
        "rows": len(result.points),
        "vehicles": len(result.vehicles),
        "acts": len(result.acts),
        "track_points": len(result.point_iris),
        "regions": len(result.regions),
        "individuals_minted": result.minted,
        "triples": len(graph),
    }
    _write_turtle(graph, out_path, report)
    if summary:
        rows = [[p.line, p.vehicle_id, p.at.isoformat(), p.lat, p.lon, p.region_label, iri.value]
                for p, iri in zip(result.points, result.point_iris)]
        _write_csv(summary, ["line", "vehicle_id", "timestamp", "lat", "lon", "region_label", "track_point"], rows,
                   report)
    if figure:
        from .plotting import plot_track

        report.outputs.append(str(plot_track(result, Path(figure))))
    return report


def cmd_ingest_sensor(csv_path: str, range_lo=None, range_hi=None, unit: str | None = None, epsilon="0",
                      out_path: str | None = None, *, base_iri: str | None = None, dataset: str = "default",
                      min_samples: int = 1, policy: str = "mean", kind: str | None = None,
                      figure: str | None = None, summary: str | None = None) -> RunReport:
    """Detect stasis segments and change events; ``epsilon`` is read in ``unit`` (base unit if none)."""
    report = RunReport("ingest-sensor", [csv_path])
    try:
        units = seed_units()
        ranged = [x is not None for x in (range_lo, range_hi)]
        if any(ranged) and not all(ranged):
            return report.fail("--range-lo and --range-hi must be given together")
        if all(ranged) and unit is None:
            return report.fail("a range needs --unit")
        range_unit = units.get(unit) if unit is not None else None
        rng = RangeSpec(Decimal(str(range_lo)), Decimal(str(range_hi)), range_unit) if all(ranged) else None
        eps = to_fraction(epsilon)
        if eps < 0:
            return report.fail("--epsilon must be non-negative")
        if range_unit is not None:
            eps *= range_unit.scale
        result: SensorResult = ingest_sensor(Path(csv_path), IdMinter(base_iri or DEFAULTS["base_iri"], dataset),
                                             rng, eps, min_samples, policy, kind, units)
    except INPUT_ERRORS as exc:
        return report.fail(str(exc))
    graph = result.graph
    _instance_check(graph, report)
    report.counts = {
        "rows": sum(len(s.series.samples) for s in result.series),
        "series": len(result.series),
        "segments": result.segment_count,
        "changes": result.event_count,
        "triples": len(graph),
    }
    report.result = {
        "series": [
            {
                "subject": s.subject_id,
                "quality_class": s.series.quality_type.value,
                "kind": s.series.kind,
                "segments": [{"interval": seg.interval.isoformat(), "samples": seg.sample_count} for seg in s.segments],
                "changes": [
                    {"kind": ev.kind, "interval": ev.at.isoformat(),
                     **({"magnitude": format_decimal(ev.magnitude)} if ev.magnitude is not None else {})}
                    for ev in s.events
                ],
            }
            for s in result.series
        ]
    }
    _write_turtle(graph, out_path, report)
    if summary:
        rows = []
        for s in result.series:
            for seg, iri in zip(s.segments, s.stasis_iris):
                rows.append([s.subject_id, "stasis", "", seg.interval.start.isoformat(), seg.interval.end.isoformat(),
                             seg.sample_count, "", iri.value])
            for ev, iri in zip(s.events, s.change_iris):
                mag = format_decimal(ev.magnitude) if ev.magnitude is not None else ""
                rows.append([s.subject_id, "change", ev.kind, ev.at.start.isoformat(), ev.at.end.isoformat(), "",
                             mag, iri.value])
        _write_csv(summary, ["subject_id", "record", "kind", "start", "end", "samples", "magnitude", "iri"], rows,
                   report)
    if figure:
        from .plotting import plot_sensor

        report.outputs.append(str(plot_sensor(result, rng, Path(figure))))
    return report


def cmd_validate(data_path: str, template_name: str, focus_iri: str) -> RunReport:
    report = RunReport("validate", [data_path])
    try:
        template = get_template(template_name)
        graph = load_turtle(data_path)
        focus = expand_curie(focus_iri, {**DEFAULT_PREFIXES, **graph.prefixes})
        conf = validate(graph, template, focus)
    except (FocusNotFound, *INPUT_ERRORS) as exc:
        return report.fail(str(exc))
    report.conformance.append(conf.to_dict())
    report.counts = {"triples": len(graph), "missing": len(conf.missing), "type_errors": len(conf.type_errors)}
    report.exit_code = OK if conf.conformant else VIOLATIONS
    return report


def cmd_check(ontology_paths: list[str] | None = None, data_paths: list[str] | None = None, *,
              use_seed: bool = True) -> RunReport:
    ontology_paths = list(ontology_paths or [])
    data_paths = list(data_paths or [])
    report = RunReport("check", ontology_paths + data_paths)
    try:
        onto = seed_graph().copy() if use_seed or not ontology_paths else Graph()
        for path in ontology_paths:
            onto.merge(load_turtle(path))
        taxonomy = load_registry(onto, strict=False)
        found = check_taxonomy(taxonomy)
        data_triples = 0
        for path in data_paths:
            data = load_turtle(path)
            data_triples += len(data)
            found.extend(check_instances(taxonomy, data))
    except INPUT_ERRORS as exc:
        return report.fail(str(exc))
    report.violations = [v.to_dict() for v in found.sorted().violations]
    report.counts = {"terms": len(taxonomy), "ontology_triples": len(onto), "data_triples": data_triples,
                     "violations": len(found)}
    report.exit_code = OK if found.ok else VIOLATIONS
    return report


def cmd_convert(value: str, from_unit: str, to_unit: str) -> RunReport:
    report = RunReport("convert", [])
    try:
        units = seed_units()
        src, dst = units.get(from_unit), units.get(to_unit)
        result = convert(value, src, dst)
    except INPUT_ERRORS as exc:
        return report.fail(str(exc))
    report.result = {"value": format_decimal(result, 12), "from": src.label, "to": dst.label, "input": str(value)}
    return report


def cmd_export(what: str, out_path: str | None = None) -> tuple[RunReport, str]:
    report = RunReport("export", [])
    try:
        if what == "templates":
            text = templates_to_json(builtin_templates())
        elif what in ("registry", "units"):
            text = Path(seed_path("registry.ttl" if what == "registry" else "units.ttl")).read_text(encoding="utf-8")
        else:
            return report.fail(f"cannot export {what!r}"), ""
    except INPUT_ERRORS as exc:
        return report.fail(str(exc)), ""
    report.counts = {"bytes": len(text.encode("utf-8"))}
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        Path(out_path).write_text(text, encoding="utf-8")
        report.outputs.append(out_path)
    return report, text


# argument handling

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cco-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file setting base_iri, dataset, seed_dir, policy, min_samples, "
                                         "vehicle_class; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--base-iri", help="namespace for minted individuals")
        p.add_argument("--dataset", help="dataset id mixed into minted IRIs")
        p.add_argument("--out", help="Turtle output path")
        p.add_argument("--figure", help="write a matplotlib figure (png, svg or pdf)")
        p.add_argument("--summary", help="write a per-record CSV summary")

    p = sub.add_parser("ingest-track", help="vehicle track CSV to TRACK graph")
    p.add_argument("csv")
    common(p)
    p.add_argument("--vehicle-class", help="registered class for vehicles (default cco:Vehicle)")

    p = sub.add_parser("ingest-sensor", help="sensor CSV to stasis and change graphs")
    p.add_argument("csv")
    common(p)
    p.add_argument("--range-lo")
    p.add_argument("--range-hi")
    p.add_argument("--unit", help="unit of the range and epsilon (label, symbol or curie)")
    p.add_argument("--epsilon", default="0", help="smallest reported change, in --unit")
    p.add_argument("--min-samples", type=int)
    p.add_argument("--policy", choices=POLICIES, help="representative value of a stasis run")
    p.add_argument("--kind", choices=(RATIO, INTERVAL), help="measurement kind (default from the units' offsets)")

    p = sub.add_parser("validate", help="check a focus node against a template")
    p.add_argument("data")
    p.add_argument("--template", required=True)
    p.add_argument("--focus", required=True, help="IRI or curie of the focus node")

    p = sub.add_parser("check", help="structural taxonomy and instance checks")
    p.add_argument("ontology", nargs="*", help="Turtle ontology files merged with the seed registry")
    p.add_argument("--data", action="append", default=[], help="instance data to check (repeatable)")
    p.add_argument("--no-seed", action="store_true", help="do not merge the seed registry")

    p = sub.add_parser("convert", help="convert a value between units")
    p.add_argument("value")
    p.add_argument("from_unit")
    p.add_argument("to_unit")

    p = sub.add_parser("export", help="print built-in templates, registry or units")
    p.add_argument("what", choices=("templates", "registry", "units"))
    p.add_argument("--out")
    return parser


def load_config(path: str | None) -> dict:
    opts = dict(DEFAULTS)
    if not path:
        return opts
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    opts.update(data)
    return opts


@contextlib.contextmanager
def _seed_dir(path: str | None):
    # the environment variable wins over the config file
    if not path or os.environ.get(SEED_DIR_ENV):
        yield
        return
    os.environ[SEED_DIR_ENV] = str(path)
    try:
        yield
    finally:
        os.environ.pop(SEED_DIR_ENV, None)


def run(argv: list[str] | None = None) -> tuple[RunReport, str | None]:
    """Parse arguments and run one command; returns the report and any raw export text."""
    args = build_parser().parse_args(argv)
    try:
        opts = load_config(args.config)
    except (OSError, ValueError) as exc:
        return RunReport(args.command, [args.config]).fail(f"config: {exc}"), None
    for key in ("base_iri", "dataset", "min_samples", "policy", "vehicle_class"):
        if getattr(args, key, None) is not None:
            opts[key] = getattr(args, key)
    with _seed_dir(opts.get("seed_dir")):
        if args.command == "ingest-track":
            return cmd_ingest_track(args.csv, opts["base_iri"], args.out, dataset=opts["dataset"],
                                    vehicle_class=opts["vehicle_class"], figure=args.figure,
                                    summary=args.summary), None
        if args.command == "ingest-sensor":
            if opts["policy"] not in POLICIES:
                return RunReport(args.command, [args.csv]).fail(f"unknown policy {opts['policy']!r}"), None
            return cmd_ingest_sensor(args.csv, args.range_lo, args.range_hi, args.unit, args.epsilon, args.out,
                                     base_iri=opts["base_iri"], dataset=opts["dataset"],
                                     min_samples=int(opts["min_samples"]), policy=opts["policy"], kind=args.kind,
                                     figure=args.figure, summary=args.summary), None
        if args.command == "validate":
            return cmd_validate(args.data, args.template, args.focus), None
        if args.command == "check":
            return cmd_check(args.ontology, args.data, use_seed=not args.no_seed), None
        if args.command == "convert":
            return cmd_convert(args.value, args.from_unit, args.to_unit), None
        report, text = cmd_export(args.what, args.out)
        return report, (None if args.out else text)


def main(argv: list[str] | None = None) -> int:
    try:
        report, text = run(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if text is not None:
        sys.stdout.write(text)
    else:
        print(report.to_json())
    if report.command == "convert" and report.exit_code == OK:
        print(report.result["value"], file=sys.stderr)
    else:
        print(report.summary(), file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
