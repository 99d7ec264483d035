"""Measurement unit registry with dimension-checked affine conversion.

Scales and offsets are held as exact fractions so that conversions such as
70 inch -> 1.778 meter come out exact; results are handed back as Decimal.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

from .rdf import Graph, Iri, Literal, Node, parse_turtle
from .rdf.namespaces import FORGE, RDFS_LABEL, expand_curie
from .registry import seed_path
from .report import DIMENSION_UNKNOWN, KIND_UNIT_MISMATCH, ViolationReport
from .temporal import TimeInstant

FORGE_DIMENSION = Iri(FORGE + "dimension")
FORGE_SCALE = Iri(FORGE + "scale")
FORGE_OFFSET = Iri(FORGE + "offset")
FORGE_SYMBOL = Iri(FORGE + "symbol")
FORGE_RATIONAL = FORGE + "rational"

RATIO = "ratio"
INTERVAL = "interval"

PRECISION = 28


class UnitError(ValueError):
    pass


class DimensionMismatch(UnitError):
    pass


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(Decimal(repr(value)))
    if isinstance(value, str) and "/" in value:
        return Fraction(value.strip())
    return Fraction(Decimal(str(value).strip()))


def to_decimal(value: Fraction) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = PRECISION
        return Decimal(value.numerator) / Decimal(value.denominator)


def format_decimal(value, significant: int = 12) -> str:
    """Fixed-point rendering rounded to ``significant`` digits, no exponent."""
    d = value if isinstance(value, Decimal) else to_decimal(to_fraction(value))
    if d.is_zero():
        return "0"
    with localcontext() as ctx:
        ctx.prec = significant
        d = +d
    text = format(d, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


@dataclass(frozen=True)
class UnitDef:
    iri: Iri
    label: str
    dimension: str
    scale: Fraction
    offset: Fraction = Fraction(0)
    symbol: str | None = None

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise UnitError(f"{self.label}: scale must be positive, got {self.scale}")

    @property
    def is_base(self) -> bool:
        return self.scale == 1 and self.offset == 0

    def to_base(self, value) -> Fraction:
        return self.scale * to_fraction(value) + self.offset

    def from_base(self, value: Fraction) -> Fraction:
        return (value - self.offset) / self.scale


def convert_exact(value, from_unit: UnitDef, to_unit: UnitDef) -> Fraction:
    if from_unit.dimension != to_unit.dimension:
        raise DimensionMismatch(
            f"cannot convert {from_unit.label} ({from_unit.dimension}) to {to_unit.label} ({to_unit.dimension})"
        )
    if from_unit == to_unit:
        return to_fraction(value)
    return to_unit.from_base(from_unit.to_base(value))


def convert(value, from_unit: UnitDef, to_unit: UnitDef) -> Decimal:
    """(from.scale * value + from.offset - to.offset) / to.scale as a Decimal."""
    return to_decimal(convert_exact(value, from_unit, to_unit))


class UnitRegistry:
    def __init__(self, units):
        self.units: dict[Iri, UnitDef] = {u.iri: u for u in units}
        bases: dict[str, list[UnitDef]] = {}
        for u in self.units.values():
            bases.setdefault(u.dimension, [])
            if u.is_base:
                bases[u.dimension].append(u)
        for dim, found in sorted(bases.items()):
            if len(found) > 1:
                names = ", ".join(sorted(u.label for u in found))
                raise UnitError(f"dimension {dim!r} has more than one base unit: {names}")
            if not found:
                raise UnitError(f"dimension {dim!r} has no base unit (scale 1, offset 0)")
        self._bases = {dim: found[0] for dim, found in bases.items()}

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self):
        return iter(sorted(self.units.values(), key=lambda u: (u.dimension, u.label)))

    def __contains__(self, item) -> bool:
        try:
            self.get(item)
        except UnitError:
            return False
        return True

    def base_unit(self, dimension: str) -> UnitDef:
        return self._bases[dimension]

    def dimensions(self) -> list[str]:
        return sorted(self._bases)

    def get(self, ref) -> UnitDef:
        """Look a unit up by UnitDef, Iri, CURIE, full IRI, label or symbol."""
        if isinstance(ref, UnitDef):
            if ref.iri in self.units:
                return self.units[ref.iri]
            raise UnitError(f"unit {ref.label} is not registered")
        if isinstance(ref, Iri):
            if ref in self.units:
                return self.units[ref]
            raise UnitError(f"unknown unit {ref.value}")
        text = str(ref).strip()
        for u in self.units.values():
            if text in (u.label, u.symbol):
                return u
        try:
            iri = expand_curie(text)
        except ValueError:
            raise UnitError(f"unknown unit {text!r}") from None
        if iri in self.units:
            return self.units[iri]
        raise UnitError(f"unknown unit {text!r}")


def _number(node: Node | None, what: str, subject: Iri) -> Fraction | None:
    if node is None:
        return None
    if not isinstance(node, Literal):
        raise UnitError(f"{subject.value}: {what} must be a literal")
    try:
        return to_fraction(node.lexical)
    except (ValueError, ArithmeticError):
        raise UnitError(f"{subject.value}: bad {what} {node.lexical!r}") from None


def load_units(graph: Graph) -> UnitRegistry:
    """Read every subject carrying ``forge:dimension`` as a unit definition."""
    units = []
    for s, _, dim in graph.match(None, FORGE_DIMENSION, None):
        if not isinstance(s, Iri) or not isinstance(dim, Literal):
            raise UnitError(f"bad unit declaration for {s}")
        scale = _number(graph.value(s, FORGE_SCALE), "scale", s)
        offset = _number(graph.value(s, FORGE_OFFSET), "offset", s)
        label = graph.value(s, RDFS_LABEL)
        symbol = graph.value(s, FORGE_SYMBOL)
        units.append(
            UnitDef(
                iri=s,
                label=label.lexical if isinstance(label, Literal) else s.value,
                dimension=dim.lexical,
                scale=Fraction(1) if scale is None else scale,
                offset=Fraction(0) if offset is None else offset,
                symbol=symbol.lexical if isinstance(symbol, Literal) else None,
            )
        )
    return UnitRegistry(units)


@lru_cache(maxsize=8)
def _seed_units(path: str) -> UnitRegistry:
    return load_units(parse_turtle(Path(path).read_text(encoding="utf-8")))


def seed_units() -> UnitRegistry:
    return _seed_units(str(seed_path("units.ttl")))


@dataclass(frozen=True)
class MeasurementRecord:
    quality: Node
    bearer: Node
    kind: str
    value: Decimal
    unit: UnitDef | Iri
    when: TimeInstant | None = None


def validate_record(record: MeasurementRecord, registry: UnitRegistry | None = None) -> ViolationReport:
    """Flag ratio measurements on offset scales and unregistered units."""
    registry = registry or seed_units()
    report = ViolationReport()
    focus = record.quality
    try:
        unit = registry.get(record.unit)
    except UnitError as exc:
        report.add(DIMENSION_UNKNOWN, focus, str(exc))
        return report
    if record.kind not in (RATIO, INTERVAL):
        raise ValueError(f"measurement kind must be 'ratio' or 'interval', got {record.kind!r}")
    if record.kind == RATIO and unit.offset != 0:
        report.add(
            KIND_UNIT_MISMATCH,
            focus,
            f"ratio measurement uses {unit.label}, whose zero is offset by {format_decimal(unit.offset)}",
        )
    return report
