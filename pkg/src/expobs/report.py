"""Structured results shared by the probes and verification harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

SCHEMA_VERSION = 1


@dataclass
class VerificationReport:
    """Outcome of one finite check.

    ``passed`` is serialized under the key ``"pass"``. A failing report must
    carry the witness that attains ``worst_margin``.
    """

    check: str
    passed: bool
    worst_margin: float
    witness: Any = None
    params: dict = field(default_factory=dict)
    metric: str = "torus-sup"
    notes: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.passed and self.witness is None:
            raise ValueError(f"{self.check}: failing report needs a witness")

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "pass": bool(self.passed),
            "worst_margin": _jsonable(self.worst_margin),
            "witness": _jsonable(self.witness),
            "params": _jsonable(self.params),
            "metric": self.metric,
            "notes": list(self.notes),
            "details": _jsonable(self.details),
        }


def _jsonable(obj):
    """Convert reports, points and numpy scalars into JSON-compatible values."""
    import math

    import numpy as np

    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return "nan"
        return v
    return obj
