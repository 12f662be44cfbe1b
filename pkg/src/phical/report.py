"""Machine-readable outcome of an identity check."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List

SCHEMA = "phical/1"


@dataclass
class CheckReport:
    name: str
    passed: bool
    violations: List[Dict[str, Any]] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "check": self.name, "pass": self.passed,
                "violations": self.violations, "meta": self.meta}

    @classmethod
    def from_checks(cls, name, violations, **meta) -> "CheckReport":
        return cls(name, not violations, list(violations), meta)


def merge(name: str, reports) -> CheckReport:
    reports = list(reports)
    out = CheckReport(name, all(r.passed for r in reports))
    for r in reports:
        out.violations.extend({"check": r.name, **v} for v in r.violations)
    out.meta["parts"] = {r.name: r.passed for r in reports}
    return out
