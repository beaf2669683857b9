"""Structured check reports.

Every verification routine returns a CheckReport: a named record of what was
checked, with which tolerances, and the worst violation found.  Reports
serialize to JSON and validate against the schema shipped in
``degenlab/schemas/check_report.schema.json``.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources

SCHEMA_VERSION = "1"

PASS = "pass"
FAIL = "fail"
DEGENERATE = "degenerate"
INCONCLUSIVE = "inconclusive"
HYPOTHESIS_VIOLATION = "hypothesis_violation"

_STATUSES = (PASS, FAIL, DEGENERATE, INCONCLUSIVE, HYPOTHESIS_VIOLATION)


def _jsonable(x):
    """Coerce numpy scalars/arrays into plain python values."""
    if hasattr(x, "tolist"):
        return x.tolist()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float):
        return float(x)
    return x


@dataclass
class CheckReport:
    check: str
    status: str
    params: dict = field(default_factory=dict)
    worst_violation: float | None = None
    witness: list | None = None
    tolerances: dict = field(default_factory=dict)
    grid: dict | None = None
    seed: int | None = None
    timing_s: float | None = None
    notes: list = field(default_factory=list)
    data: dict = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def __post_init__(self):
        if self.status not in _STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def passed(self) -> bool:
        return self.status == PASS

    def to_dict(self, deterministic: bool = False) -> dict:
        d = {
            "schema_version": self.schema_version,
            "check": self.check,
            "status": self.status,
            "params": _jsonable(self.params),
            "worst_violation": _jsonable(self.worst_violation),
            "witness": _jsonable(self.witness),
            "tolerances": _jsonable(self.tolerances),
            "grid": _jsonable(self.grid),
            "seed": self.seed,
            "notes": list(self.notes),
            "data": _jsonable(self.data),
        }
        if not deterministic:
            d["timing_s"] = self.timing_s
        return d

    def to_json(self, deterministic: bool = False) -> str:
        return json.dumps(self.to_dict(deterministic=deterministic), sort_keys=True)


class timer:
    """Context manager stamping ``timing_s`` onto a report factory."""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def load_schema() -> dict:
    text = resources.files("degenlab.schemas").joinpath("check_report.schema.json").read_text()
    return json.loads(text)
