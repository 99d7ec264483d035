"""The eight acceptance criteria, each printing one PASS/FAIL line."""

from __future__ import annotations

import random
import time
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from pathlib import Path

import pytest

from cco_forge.cli import cmd_check, cmd_ingest_track, cmd_validate
from cco_forge.patterns import IdMinter, focus_of, instantiate, validate
from cco_forge.rdf import compare_graphs, parse_turtle, serialize_turtle
from cco_forge.registry import DISJOINT_TYPES, check_instances, check_taxonomy, seed_path, seed_taxonomy
from cco_forge.stasis import RangeSpec, Sample, TimeSeries, date_token, detect_stasis
from cco_forge.ingest import ingest_sensor
from cco_forge.temporal import MultiInterval, TimeInstant, TimeInterval, instant_inside, interval_during, multi_contains
from cco_forge.units import MeasurementRecord, convert, seed_units, validate_record

from oracles import maximal_runs
from samples import SAMPLES, bfo, cco, ex
from strategies import mutate_disjoint, random_graph, random_instance_graph

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def verdict(capsys):
    def emit(number: int, title: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nacceptance {number} {'PASS' if ok else 'FAIL'}: {title} ({detail})")
        assert ok, detail

    return emit


def test_1_parser_round_trip(verdict):
    rng = random.Random(1)
    docs = [seed_path("registry.ttl").read_text(encoding="utf-8")]
    docs += [serialize_turtle(random_graph(rng, rng.randint(1, 500))) for _ in range(20)]
    start = time.perf_counter()
    results = []
    for text in docs:
        g = parse_turtle(text)
        results.append(compare_graphs(parse_turtle(serialize_turtle(g)), g))
    elapsed = time.perf_counter() - start
    seed_size = len(parse_turtle(docs[0]))
    verdict(1, "parser round-trip", all(results) and elapsed < 1.0,
            f"{sum(results)}/{len(docs)} documents, seed {seed_size} triples, {elapsed:.3f}s")


def test_2_taxonomy_fidelity(verdict):
    t = seed_taxonomy()
    chains = [
        [cco("Truck"), cco("GroundMotorVehicle"), cco("GroundVehicle"), cco("Vehicle"), cco("MaterialArtifact"),
         bfo("MaterialEntity"), bfo("IndependentContinuant"), bfo("Continuant")],
        [bfo("Function"), bfo("Disposition"), bfo("RealizableEntity")],
        [cco("IntervalMeasurementInformationContentEntity"), cco("DescriptiveInformationContentEntity"),
         cco("InformationContentEntity")],
    ]
    links = [(a, b) for chain in chains for i, a in enumerate(chain) for b in chain[i + 1:]]
    held = sum(t.is_subclass_of(a, b) for a, b in links)
    violations = len(check_taxonomy(t))
    verdict(2, "taxonomy fidelity", held == len(links) and violations == 0,
            f"{held}/{len(links)} subsumptions, {violations} seed violations")


def test_3_disjointness_soundness(verdict):
    t = seed_taxonomy()
    rng = random.Random(3)
    flagged = false_pos = 0
    for _ in range(100):
        clean = random_instance_graph(rng, t)
        false_pos += DISJOINT_TYPES in check_instances(t, clean).codes()
        mutant, victim = mutate_disjoint(rng, clean, t)
        found = check_instances(t, mutant)
        flagged += any(v.code == DISJOINT_TYPES and v.focus == victim.value for v in found.violations)
    verdict(3, "disjointness soundness", flagged == 100 and false_pos == 0,
            f"{flagged}/100 mutants flagged, {false_pos} false positives")


def test_4_pattern_mutation_kill(verdict):
    conformant = killed = mutants = 0
    for name, binding in sorted(SAMPLES.items()):
        g, focus = instantiate(name, binding), focus_of(name, binding)
        conformant += validate(g, name, focus).conformant
        for triple in g.triples():
            mutant = g.copy()
            mutant.remove(triple)
            mutants += 1
            if not mutant.has_node(focus):
                # the validator refuses a vanished focus outright
                killed += 1
                continue
            killed += not validate(mutant, name, focus).conformant
    verdict(4, "pattern round-trip and mutation kill", conformant == len(SAMPLES) and killed == mutants,
            f"{conformant}/{len(SAMPLES)} conformant, {killed}/{mutants} mutants killed")


def test_5_temporal_ladder(verdict):
    moment = TimeInstant.parse("2004-05-17T13:38:00-04:00")
    may, june, july = (TimeInterval.month(2004, m) for m in (5, 6, 7))
    spring = TimeInterval.months(2004, 3, 5)
    multi = MultiInterval("month", (may, july))
    checks = {
        "instant inside May": instant_inside(moment, may),
        "May during spring": interval_during(may, spring),
        "multi-month holds May": multi_contains(multi, may),
        "multi-month holds the instant": multi_contains(multi, moment),
        "June gap excluded": not multi_contains(multi, june),
        "removing May flips": not multi_contains(multi.without(may), may)
        and not multi_contains(multi.without(may), moment),
    }
    failed = [k for k, v in checks.items() if not v]
    verdict(5, "temporal ladder", not failed, "all steps hold" if not failed else f"failed: {', '.join(failed)}")


def test_6_stasis_oracle(verdict):
    units = seed_units()
    celsius, fahrenheit = units.get("celsius"), units.get("fahrenheit")
    rng = random.Random(6)
    start = datetime(2024, 1, 1, tzinfo=timezone.utc)
    grid = [Decimal(x) / 10 for x in range(350, 400)]
    mismatches = 0
    for _ in range(1000):
        n = rng.randint(1, 200)
        values = [None if rng.random() < 0.1 else rng.choice(grid) for _ in range(n)]
        lo, hi = sorted(rng.sample(grid, 2))
        spec = RangeSpec(lo, hi, celsius) if rng.random() < 0.5 else RangeSpec(lo * 9 / 5 + 32, hi * 9 / 5 + 32, fahrenheit)
        min_samples = rng.randint(1, 5)
        series = TimeSeries(ex("q"), ex("b"), "interval",
                            [Sample(TimeInstant(start + timedelta(minutes=i)), v, celsius) for i, v in enumerate(values)])
        got = [(s.first_index, s.first_index + s.sample_count - 1) for s in detect_stasis(series, spec, min_samples)]
        mismatches += got != maximal_runs(values, celsius, spec, min_samples)
    mary = ingest_sensor(FIXTURES / "mary_normal.csv", IdMinter(),
                         RangeSpec(Decimal("36.0"), Decimal("37.5"), celsius))
    segments = mary.series[0].segments
    tokens = [date_token(s.interval) for s in segments]
    mary_ok = tokens == [("2024-03-15", "3/15/24")]
    text = serialize_turtle(mary.graph)
    mary_ok = mary_ok and '"2024-03-15"' in text and '"3/15/24"' in text
    verdict(6, "stasis oracle equivalence", mismatches == 0 and mary_ok,
            f"{1000 - mismatches}/1000 series match, Mary segments {tokens}")


def test_7_unit_conversion(verdict):
    units = seed_units()
    inch, meter = units.get("inch"), units.get("meter")
    exact = convert(Decimal(70), inch, meter) == Decimal("1.778")
    rng = random.Random(7)
    by_dim: dict[str, list] = {}
    for u in units:
        by_dim.setdefault(u.dimension, []).append(u)
    dims = sorted(d for d, us in by_dim.items() if len(us) > 1)
    worst = Decimal(0)
    for _ in range(10_000):
        dim = rng.choice(dims)
        a, b, c = (rng.choice(by_dim[dim]) for _ in range(3))
        x = Decimal(rng.uniform(-1e6, 1e6)).quantize(Decimal("1e-6"))
        back = convert(convert(x, a, b), b, a)
        direct, hop = convert(x, a, c), convert(convert(x, a, b), b, c)
        worst = max(worst, abs(back - x) / max(abs(x), 1), abs(hop - direct) / max(abs(direct), 1))
    rejected = not validate_record(MeasurementRecord(ex("q"), ex("b"), "ratio", Decimal(37), units.get("celsius"))).ok
    verdict(7, "unit conversion", exact and worst <= Decimal("1e-9") and rejected,
            f"70 in -> {convert(Decimal(70), inch, meter)} m, worst relative error {worst:.2e}, ratio+celsius rejected={rejected}")


def test_8_end_to_end(verdict, tmp_path):
    outs, codes = [], []
    for run in ("a", "b"):
        out = tmp_path / f"{run}.ttl"
        report = cmd_ingest_track(str(FIXTURES / "track_ny.csv"), out_path=str(out))
        codes.append(report.exit_code)
        outs.append(out.read_bytes())
        vehicle = report.conformance[0]["focus"]
        codes.append(cmd_validate(str(out), "TRACK", vehicle).exit_code)
        codes.append(cmd_check([], [str(out)]).exit_code)
    identical = outs[0] == outs[1]
    verdict(8, "end-to-end ingest, validate and check", codes == [0] * 6 and identical,
            f"exit codes {codes}, byte-identical={identical}, {len(outs[0])} bytes")
