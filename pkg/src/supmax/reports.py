"""Verdict records shared by the discrete-time and verification checks."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field


class Verdict(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BinEstimate:
    """One conditional-moment estimate checked against its analytic target."""

    quantity: str
    lo: float
    hi: float
    count: int
    mean: float
    ci_low: float
    ci_high: float
    target: float
    allowance: float
    verdict: Verdict


@dataclass
class DriftReport:
    target: str
    bins: list[BinEstimate] = field(default_factory=list)

    @property
    def verdict(self) -> Verdict:
        verdicts = {b.verdict for b in self.bins}
        if Verdict.FAIL in verdicts:
            return Verdict.FAIL
        if Verdict.PASS in verdicts:
            return Verdict.PASS
        return Verdict.INCONCLUSIVE

    def as_dict(self) -> dict:
        return {
            "target": self.target,
            "verdict": str(self.verdict),
            "bins": [
                {k: (str(v) if isinstance(v, Verdict) else v) for k, v in asdict(b).items()}
                for b in self.bins
            ],
        }
