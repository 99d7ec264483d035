"""Figures for ingestion runs, rendered with matplotlib's Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .ingest import SensorResult, TrackResult  # noqa: E402
from .stasis import DECREASE, GAIN, INCREASE, LOSS, RangeSpec  # noqa: E402

_MARKERS = {INCREASE: ("^", "tab:red"), DECREASE: ("v", "tab:blue"), GAIN: ("P", "tab:green"), LOSS: ("X", "black")}

# fixed metadata keeps repeated renders byte-identical
_META = {".png": {"Software": None}, ".svg": {"Date": None}, ".pdf": {"CreationDate": None, "ModDate": None}}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, metadata=_META.get(path.suffix.lower()), dpi=100)
    plt.close(fig)
    return path


def plot_track(result: TrackResult, path: Path) -> Path:
    """Longitude/latitude path of each vehicle, points labelled by region."""
    fig, ax = plt.subplots(figsize=(7, 5))
    by_vehicle: dict[str, list] = {}
    for pt in result.points:
        by_vehicle.setdefault(pt.vehicle_id, []).append(pt)
    for vehicle_id in sorted(by_vehicle):
        pts = sorted(by_vehicle[vehicle_id], key=lambda p: p.at)
        xs = [float(p.lon) for p in pts]
        ys = [float(p.lat) for p in pts]
        ax.plot(xs, ys, marker="o", label=vehicle_id)
        for p, x, y in zip(pts, xs, ys):
            ax.annotate(f"{p.region_label}\n{p.at}", (x, y), fontsize=7, xytext=(4, 4), textcoords="offset points")
    ax.margins(0.2)
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    ax.set_title("Vehicle track points")
    if by_vehicle:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def plot_sensor(result: SensorResult, rng: RangeSpec | None, path: Path) -> Path:
    """One panel per series: values, the normal range, stasis spans and change markers."""
    n = max(1, len(result.series))
    fig, axes = plt.subplots(n, 1, figsize=(8, 3 * n), squeeze=False)
    for ax, res in zip(axes[:, 0], result.series):
        series = res.series
        present = [s for s in series.samples if s.present]
        unit = rng.unit if rng is not None else (present[0].unit if present else None)
        xs = [s.at.value for s in present]
        ys = [float(unit.from_base(s.base())) for s in present]
        ax.plot(xs, ys, marker=".", color="tab:gray")
        if rng is not None:
            ax.axhspan(float(rng.lo), float(rng.hi), color="tab:green", alpha=0.1)
        for seg in res.segments:
            ax.axvspan(seg.interval.start.value, seg.interval.end.value, color="tab:green", alpha=0.3)
        for ev in res.events:
            marker, color = _MARKERS[ev.kind]
            mid = ev.at.start.value + (ev.at.end.value - ev.at.start.value) / 2
            ends = [v for s, v in zip(present, ys) if s.at in (ev.at.start, ev.at.end)]
            y = sum(ends) / len(ends) if ends else 0.0
            ax.scatter([mid], [y], marker=marker, color=color, zorder=3)
        ax.set_title(f"{res.subject_id}: {series.quality_type.value.rsplit('/', 1)[-1] if series.quality_type else ''}")
        ax.set_ylabel(unit.label if unit is not None else "")
        ax.grid(True, alpha=0.3)
    fig.autofmt_xdate()
    fig.tight_layout()
    return _save(fig, path)
