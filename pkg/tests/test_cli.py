from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

import pytest

from cco_forge.cli import main
from cco_forge.registry import SEED_DIR_ENV, seed_path
from cco_forge.rdf import load_turtle, parse_turtle


def run(capsys, *argv) -> tuple[int, dict | str, str]:
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    try:
        return code, json.loads(out), err
    except json.JSONDecodeError:
        return code, out, err


def _ingest_ny(capsys, fixtures, tmp_path, name="ny.ttl", *extra):
    out = tmp_path / name
    code, report, _ = run(capsys, "ingest-track", fixtures / "track_ny.csv", "--out", out, *extra)
    return code, report, out


# ingest-track

def test_ingest_track_ny(capsys, fixtures, tmp_path):
    code, report, out = _ingest_ny(capsys, fixtures, tmp_path)
    assert code == 0
    assert report["counts"]["rows"] == 3
    assert report["counts"]["acts"] == 1
    assert report["counts"]["track_points"] == 3
    assert report["counts"]["triples"] == len(load_turtle(out))
    assert all(c["status"] == "conformant" for c in report["conformance"])


def test_ingest_then_validate_and_check(capsys, fixtures, tmp_path):
    _, report, out = _ingest_ny(capsys, fixtures, tmp_path)
    vehicle = report["conformance"][0]["focus"]
    code, rep, _ = run(capsys, "validate", out, "--template", "TRACK", "--focus", vehicle)
    assert code == 0 and rep["counts"]["missing"] == 0
    code, rep, _ = run(capsys, "check", "--data", out)
    assert code == 0 and rep["counts"]["violations"] == 0


def test_ingest_track_deterministic(capsys, fixtures, tmp_path):
    _, r1, a = _ingest_ny(capsys, fixtures, tmp_path, "a.ttl")
    _, r2, b = _ingest_ny(capsys, fixtures, tmp_path, "b.ttl")
    assert a.read_bytes() == b.read_bytes()
    r1.pop("outputs"), r2.pop("outputs")
    assert r1 == r2


def test_dataset_changes_minted_iris(capsys, fixtures, tmp_path):
    _, _, a = _ingest_ny(capsys, fixtures, tmp_path, "a.ttl")
    _, _, b = _ingest_ny(capsys, fixtures, tmp_path, "b.ttl", "--dataset", "other")
    assert a.read_text() != b.read_text()


def test_ingest_track_figure_and_summary(capsys, fixtures, tmp_path):
    fig, summ = tmp_path / "track.png", tmp_path / "track.csv"
    code, report, _ = _ingest_ny(capsys, fixtures, tmp_path, "ny.ttl", "--figure", fig, "--summary", summ)
    assert code == 0
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    rows = list(csv.DictReader(summ.open()))
    assert [r["region_label"] for r in rows] == ["Buffalo NY", "New York State Thruway Exit 33 Toll Plaza", "Rome NY"]
    assert str(fig) in report["outputs"]
    first = fig.read_bytes()
    _ingest_ny(capsys, fixtures, tmp_path, "ny.ttl", "--figure", fig)
    assert fig.read_bytes() == first


@pytest.mark.parametrize("name,line", [("track_bad.csv", 3), ("track_duplicate.csv", 3)])
def test_ingest_track_bad_rows(capsys, fixtures, name, line):
    code, report, err = run(capsys, "ingest-track", fixtures / name)
    assert code == 2
    assert f"line {line}" in report["errors"][0]
    assert "error" in err


def test_ingest_track_empty(capsys, fixtures):
    code, report, _ = run(capsys, "ingest-track", fixtures / "track_empty.csv")
    assert code == 0 and report["counts"]["triples"] == 0


def test_ingest_track_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "ingest-track", tmp_path / "nope.csv")
    assert code == 2


def test_vehicle_class_must_be_vehicle(capsys, fixtures):
    assert run(capsys, "ingest-track", fixtures / "track_ny.csv", "--vehicle-class", "cco:Truck")[0] == 0
    assert run(capsys, "ingest-track", fixtures / "track_ny.csv", "--vehicle-class", "cco:Stasis")[0] == 2


# ingest-sensor

def _sensor(capsys, fixtures, name, *extra):
    return run(capsys, "ingest-sensor", fixtures / name, "--range-lo", "36.0", "--range-hi", "37.5",
               "--unit", "celsius", "--epsilon", "0.5", *extra)


def test_sensor_normal_day(capsys, fixtures, tmp_path):
    out = tmp_path / "mary.ttl"
    code, report, _ = _sensor(capsys, fixtures, "mary_normal.csv", "--out", out)
    assert code == 0
    assert report["counts"]["segments"] == 1 and report["counts"]["changes"] == 0
    text = out.read_text()
    assert '"2024-03-15"' in text and '"3/15/24"' in text


def test_sensor_spike(capsys, fixtures, tmp_path):
    summ = tmp_path / "s.csv"
    code, report, _ = _sensor(capsys, fixtures, "mary_spike.csv", "--summary", summ, "--figure", tmp_path / "s.svg")
    assert code == 0
    series = report["result"]["series"][0]
    assert len(series["segments"]) == 2
    assert [c["kind"] for c in series["changes"]] == ["increase", "decrease"]
    assert [r["record"] for r in csv.DictReader(summ.open())] == ["stasis", "stasis", "change", "change"]
    assert (tmp_path / "s.svg").read_text().lstrip().startswith("<?xml")


def test_sensor_epsilon_follows_unit(capsys, fixtures):
    # 0.9 fahrenheit is 0.5 kelvin, so the same jitter threshold applies
    code, report, _ = run(capsys, "ingest-sensor", fixtures / "mary_spike.csv", "--range-lo", "96.8",
                          "--range-hi", "99.5", "--unit", "fahrenheit", "--epsilon", "0.9")
    assert code == 0
    assert [c["kind"] for c in report["result"]["series"][0]["changes"]] == ["increase", "decrease"]


def test_sensor_errors(capsys, fixtures):
    assert run(capsys, "ingest-sensor", fixtures / "mary_absent.csv")[0] == 2
    assert run(capsys, "ingest-sensor", fixtures / "mary_normal.csv", "--range-lo", "1")[0] == 2
    assert run(capsys, "ingest-sensor", fixtures / "mary_normal.csv", "--range-lo", "1", "--range-hi", "2")[0] == 2
    assert _sensor(capsys, fixtures, "mary_normal.csv", "--epsilon", "-1")[0] == 2
    code, report, _ = run(capsys, "ingest-sensor", fixtures / "mary_normal.csv", "--range-lo", "1",
                          "--range-hi", "2", "--unit", "kilogram")
    assert code == 2 and "mass" in report["errors"][0]


def test_sensor_without_range_reports_changes_only(capsys, fixtures):
    code, report, _ = run(capsys, "ingest-sensor", fixtures / "mary_spike.csv")
    assert code == 0 and report["counts"]["segments"] == 0 and report["counts"]["changes"] == 4


# validate and check

def test_validate_wrong_template(capsys, fixtures, tmp_path):
    _, report, out = _ingest_ny(capsys, fixtures, tmp_path)
    vehicle = report["conformance"][0]["focus"]
    code, rep, _ = run(capsys, "validate", out, "--template", "MEASURE", "--focus", vehicle)
    assert code == 1 and rep["conformance"][0]["missing"]
    assert run(capsys, "validate", out, "--template", "NOPE", "--focus", vehicle)[0] == 2
    assert run(capsys, "validate", out, "--template", "TRACK", "--focus", "http://example.org/none")[0] == 2


def test_check_cycle_and_disjoint(capsys, fixtures):
    code, report, _ = run(capsys, "check", fixtures / "cycle.ttl")
    assert code == 1 and {v["code"] for v in report["violations"]} == {"CYCLE"}
    code, report, _ = run(capsys, "check", "--data", fixtures / "disjoint_data.ttl")
    assert code == 1 and "DISJOINT_TYPES" in {v["code"] for v in report["violations"]}


def test_check_seed_clean(capsys):
    code, report, _ = run(capsys, "check")
    assert code == 0 and report["counts"]["terms"] >= 100


def test_check_bad_turtle(capsys, tmp_path):
    bad = tmp_path / "bad.ttl"
    bad.write_text("@prefix ex: <http://example.org/> .\nex:a ex:b .\n")
    code, report, _ = run(capsys, "check", bad)
    assert code == 2 and "line 2" in report["errors"][0]


# convert and export

@pytest.mark.parametrize("value,src,dst,expected", [
    ("70", "inch", "meter", "1.778"),
    ("0", "celsius", "kelvin", "273.15"),
    ("37.0", "celsius", "fahrenheit", "98.6"),
])
def test_convert(capsys, value, src, dst, expected):
    code, report, err = run(capsys, "convert", value, src, dst)
    assert code == 0 and report["result"]["value"] == expected and err.strip() == expected


def test_convert_dimension_mismatch(capsys):
    assert run(capsys, "convert", "1", "kilogram", "meter")[0] == 2
    assert run(capsys, "convert", "1", "furlong", "meter")[0] == 2


def test_export(capsys, tmp_path):
    code, text, _ = run(capsys, "export", "templates")
    assert code == 0 and {t["name"] for t in text["templates"]} >= {"TRACK", "STASIS", "CHANGE"}
    code, text, _ = run(capsys, "export", "registry")
    assert code == 0 and len(parse_turtle(text)) > 400
    out = tmp_path / "units.ttl"
    code, report, _ = run(capsys, "export", "units", "--out", out)
    assert code == 0 and len(parse_turtle(out.read_text())) > 0


# configuration

def test_config_file(capsys, fixtures, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"base_iri": "https://data.example.net/run", "dataset": "ny"}))
    out = tmp_path / "ny.ttl"
    assert run(capsys, "--config", cfg, "ingest-track", fixtures / "track_ny.csv", "--out", out)[0] == 0
    assert "https://data.example.net/run/" in out.read_text()


def test_config_unknown_key(capsys, fixtures, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"base": "x"}))
    code, report, _ = run(capsys, "--config", cfg, "ingest-track", fixtures / "track_ny.csv")
    assert code == 2 and "base" in report["errors"][0]


def test_config_bad_policy(capsys, fixtures, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"policy": "median"}))
    assert run(capsys, "--config", cfg, "ingest-sensor", fixtures / "mary_normal.csv")[0] == 2


def test_seed_dir_override(capsys, tmp_path, monkeypatch):
    seed = tmp_path / "seed"
    seed.mkdir()
    text = seed_path("registry.ttl").read_text()
    (seed / "registry.ttl").write_text(
        text + "\n<https://example.org/extra/Widget> a owl:Class ;\n"
        "    rdfs:subClassOf <http://www.ontologyrepository.com/CommonCoreOntologies/Artifact> ;\n"
        '    rdfs:label "widget"@en ;\n'
        '    forge:module "artifact" ;\n'
        '    skos:definition "A test artifact." .\n'
    )
    baseline = run(capsys, "check")[1]["counts"]["terms"]
    monkeypatch.setenv(SEED_DIR_ENV, str(seed))
    code, report, _ = run(capsys, "check")
    assert code == 0 and report["counts"]["terms"] == baseline + 1


def test_seed_dir_from_config(capsys, tmp_path):
    seed = tmp_path / "seed"
    shutil.copytree(Path(seed_path("units.ttl")).parent, seed)
    units = (seed / "units.ttl").read_text().replace('"inch"', '"inchy"')
    (seed / "units.ttl").write_text(units)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed_dir": str(seed)}))
    assert run(capsys, "--config", cfg, "convert", "1", "inchy", "meter")[0] == 0
    assert run(capsys, "convert", "1", "inchy", "meter")[0] == 2


def test_usage_error(capsys):
    assert main(["ingest-track"]) == 2
