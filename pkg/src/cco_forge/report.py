"""Violation records shared by the structural and measurement checks."""

from __future__ import annotations

from dataclasses import dataclass, field

CYCLE = "CYCLE"
DISJOINT_TYPES = "DISJOINT_TYPES"
UNKNOWN_TERM = "UNKNOWN_TERM"
BAD_PREDICATE_KIND = "BAD_PREDICATE_KIND"
KIND_UNIT_MISMATCH = "KIND_UNIT_MISMATCH"
DIMENSION_UNKNOWN = "DIMENSION_UNKNOWN"


@dataclass(frozen=True)
class Violation:
    code: str
    focus: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "focus": self.focus, "message": self.message}


@dataclass
class ViolationReport:
    violations: list[Violation] = field(default_factory=list)

    def add(self, code: str, focus, message: str) -> None:
        self.violations.append(Violation(code, str(getattr(focus, "value", focus)), message))

    def extend(self, other: "ViolationReport") -> None:
        self.violations.extend(other.violations)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def codes(self) -> set[str]:
        return {v.code for v in self.violations}

    def sorted(self) -> "ViolationReport":
        return ViolationReport(sorted(self.violations, key=lambda v: (v.code, v.focus, v.message)))

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}
