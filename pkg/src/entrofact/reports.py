"""Verdicts and check reports shared by the numerical checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

PASS, WARN, FAIL = "pass", "warn", "fail"
_RANK = {PASS: 0, WARN: 1, FAIL: 2}


def worst(verdicts) -> str:
    out = PASS
    for v in verdicts:
        if _RANK[v] > _RANK[out]:
            out = v
    return out


def sigma_verdict(excess: float, stderr: float) -> str:
    """Three-sigma statistical verdict for a one-sided deviation ``excess``.

    ``excess`` is how far the estimate falls on the wrong side after any
    deterministic allowance.  <= 3 stderr passes, 3-4 stderr warns, more fails.
    """
    if excess <= 3 * stderr:
        return PASS
    if excess <= 4 * stderr:
        return WARN
    return FAIL


def margin_verdict(margin: float, tol: float = 0.0) -> str:
    """Deterministic inequality check: pass iff margin >= -tol."""
    return PASS if margin >= -tol else FAIL


def _clean(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if hasattr(x, "tolist"):
        return _clean(x.tolist())
    return x


@dataclass
class CheckReport:
    name: str
    verdict: str
    worst_margin: float
    records: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict != FAIL

    def to_dict(self) -> dict:
        return _clean({
            "name": self.name,
            "verdict": self.verdict,
            "worst_margin": float(self.worst_margin),
            "records": self.records,
            "details": self.details,
        })
