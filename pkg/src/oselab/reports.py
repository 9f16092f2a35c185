from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

PASS_RTOL = 1e-9


@dataclass(frozen=True)
class BoundReport:
    """An evaluated bound against the measured quantity it controls."""

    bound_value: float
    measured: float
    context: dict[str, Any] = field(default_factory=dict)

    @property
    def margin(self) -> float:
        return self.bound_value - self.measured

    @property
    def passed(self) -> bool:
        return self.margin >= -PASS_RTOL * max(1.0, abs(self.bound_value))

    def to_dict(self) -> dict[str, Any]:
        return {
            "bound_value": self.bound_value,
            "measured": self.measured,
            "margin": self.margin,
            "passed": self.passed,
            "context": _jsonable(self.context),
        }


def _jsonable(obj):
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    return obj
