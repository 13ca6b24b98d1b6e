"""Decision record returned by every test procedure."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np


class Procedure(str, enum.Enum):
    PSI1 = "PSI1"
    PSI2 = "PSI2"
    PSI3 = "PSI3"
    T_ALPHA = "T_ALPHA"
    T_ALPHA_LEFT = "T_ALPHA_LEFT"


@dataclass
class TestReport:
    """Outcome of one level-``alpha`` test.

    ``reject`` follows the usual convention: True means H0 is rejected.
    For PSI1 ``statistic`` and ``threshold`` are scalars; for the order
    statistic procedures they are lists aligned with ``details``.
    """

    __test__ = False  # keep pytest from collecting this class

    procedure: Procedure
    reject: bool
    alpha: float
    statistic: float | list[float]
    threshold: float | list[float]
    details: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "procedure": self.procedure.value,
            "reject": bool(self.reject),
            "alpha": self.alpha,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "details": self.details,
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs: Any) -> str:
        return json.dumps(_jsonable(self.to_dict()), **kwargs)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float):
        # infinite thresholds are persisted as an explicit marker, never a bare float
        if obj == float("inf"):
            return "+inf"
        if obj == float("-inf"):
            return "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def repr_17(x: float) -> str:
    """17 significant digits: lossless for IEEE doubles."""
    return format(float(x), ".17g")
