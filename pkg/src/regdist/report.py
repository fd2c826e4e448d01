"""Check rows and certificate reports produced by every validator."""
from __future__ import annotations

import math
from dataclasses import dataclass, field


PASS = "pass"
FAIL = "fail"
AMBIGUOUS = "ambiguous"


def _demote(x):
    """Builtin float when it fits; extended-precision scalars pass through
    (certificate constants can exceed the double range while staying finite)."""
    try:
        if abs(x) <= 1.6e308:
            return float(x)
    except (TypeError, OverflowError):
        pass
    return x


@dataclass(frozen=True)
class CheckRow:
    """One verified inequality: observed <= claimed, up to margin."""

    stage: str
    check: str
    location: str
    claimed: float
    observed: float
    margin: float = 0.0

    @property
    def verdict(self) -> str:
        if self.observed <= self.claimed:
            return PASS
        if self.observed <= self.claimed + self.margin:
            return AMBIGUOUS
        return FAIL

    @property
    def ratio(self) -> float:
        if self.claimed == 0.0:
            return math.inf if self.observed > 0.0 else 0.0
        if not math.isfinite(self.claimed):
            return 0.0
        return self.observed / self.claimed


@dataclass
class CertificateReport:
    """A list of checked inequalities with an aggregate verdict."""

    rows: list[CheckRow] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def add(self, stage, check, location, claimed, observed, margin=0.0):
        self.rows.append(CheckRow(stage, check, location, _demote(claimed),
                                  _demote(observed), _demote(margin)))

    def extend(self, other: "CertificateReport"):
        self.rows.extend(other.rows)

    @property
    def verdict(self) -> str:
        verdicts = {row.verdict for row in self.rows}
        if FAIL in verdicts:
            return FAIL
        if AMBIGUOUS in verdicts:
            return AMBIGUOUS
        return PASS

    @property
    def worst_ratio(self) -> float:
        ratios = [row.ratio for row in self.rows if math.isfinite(row.ratio)]
        return max(ratios) if ratios else 0.0

    def failures(self) -> list[CheckRow]:
        return [row for row in self.rows if row.verdict == FAIL]

    def worst_row(self) -> CheckRow | None:
        best = None
        for row in self.rows:
            if math.isfinite(row.ratio) and (best is None or row.ratio > best.ratio):
                best = row
        return best

    def __bool__(self) -> bool:
        return self.verdict == PASS
