"""Check records and reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any


def jsonable(value: Any) -> Any:
    """Recursively convert rationals, tuples and Weil elements to JSON-friendly values."""
    from .weil import WeilElement, format_scalar

    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (Fraction, float)):
        return format_scalar(value)
    if isinstance(value, int):
        return value
    if isinstance(value, WeilElement):
        return {",".join(map(str, m)): format_scalar(c) for m, c in value.terms().items()}
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


@dataclass
class CheckResult:
    check_id: str
    anchor: str
    passed: bool
    samples: int = 0
    witness: Any = None
    detail: str = ""
    elapsed: float = 0.0

    @property
    def status(self) -> str:
        return "pass" if self.passed else "fail"

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "check": self.check_id,
            "anchor": self.anchor,
            "status": self.status,
            "samples": self.samples,
        }
        if self.detail:
            out["detail"] = self.detail
        if not self.passed and self.witness is not None:
            out["witness"] = jsonable(self.witness)
        if timing:
            out["elapsed_s"] = round(self.elapsed, 6)
        return out


@dataclass
class Report:
    scenario: str
    seed: int
    mode: str
    tolerance: float
    records: list[CheckResult] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def summary(self) -> dict:
        failed = sum(not r.passed for r in self.records)
        return {"checks": len(self.records), "passed": len(self.records) - failed, "failed": failed}

    def to_dict(self, timing: bool = True) -> dict:
        out = {
            "scenario": self.scenario,
            "seed": self.seed,
            "mode": self.mode,
            "tolerance": self.tolerance,
            "summary": self.summary(),
            "records": [r.to_dict(timing) for r in sorted(self.records, key=lambda r: r.check_id)],
        }
        if timing:
            out["elapsed_s"] = round(self.elapsed, 6)
        return out

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True)

    def to_text(self) -> str:
        lines = [f"scenario {self.scenario}  seed={self.seed}  mode={self.mode}"]
        for r in sorted(self.records, key=lambda r: r.check_id):
            lines.append(f"  [{r.status.upper():4}] {r.check_id}  ({r.samples} samples)  {r.anchor}")
            if not r.passed:
                lines.append(f"         {r.detail}")
        s = self.summary()
        lines.append(f"{s['passed']}/{s['checks']} checks passed")
        return "\n".join(lines)
