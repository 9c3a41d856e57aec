"""Check report records and their JSON-lines / CSV serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any


def _clean(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and callable(v.item):
        return _clean(v.item())
    return v


@dataclass
class CheckReport:
    """One certified identity or inequality.

    ``lhs`` and ``rhs`` are the two sides; ``ratio`` is ``lhs / rhs`` (or an
    implied constant); ``passed`` is the gate outcome.  Monte Carlo checks fill
    ``lhs_se``, ``replicates`` and ``seeds``.
    """

    check: str
    params: dict
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    mesh: Any = None
    lhs_se: float | None = None
    replicates: int | None = None
    seeds: Any = None
    tag: str | None = None
    note: str | None = None
    extra: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {
            "check": self.check,
            "params": self.params,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "mesh": self.mesh,
            "pass": bool(self.passed),
        }
        for key in ("lhs_se", "replicates", "seeds", "tag", "note"):
            val = getattr(self, key)
            if val is not None:
                rec[key] = val
        if self.extra:
            rec["extra"] = self.extra
        return _clean(rec)


def to_jsonl(reports) -> str:
    return "".join(json.dumps(r.to_record(), sort_keys=True) + "\n" for r in reports)


def summary_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "lhs", "rhs", "ratio", "mesh", "pass"])
    for r in reports:
        rec = r.to_record()
        num = lambda v: v if isinstance(v, str) else repr(v)
        w.writerow([rec["check"], num(rec["lhs"]), num(rec["rhs"]), num(rec["ratio"]),
                    json.dumps(rec["mesh"]), int(rec["pass"])])
    return buf.getvalue()
