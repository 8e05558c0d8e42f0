"""Per-parameter cost functions used by the cost-based selector.

A cost function maps a native hyper-parameter value to a penalty in [0, 1].
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Any, Mapping, Protocol, Sequence


class CostFunction(Protocol):
    kind: str

    def __call__(self, value: float) -> float: ...

    def to_dict(self) -> dict[str, Any]: ...


@dataclass(frozen=True)
class ZeroCost:
    kind: str = "zero"

    def __call__(self, value: float) -> float:
        return 0.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class LinearCost:
    """Cost grows linearly from 0 at ``lower`` to 1 at ``upper``."""

    lower: float
    upper: float
    kind: str = "linear"

    def __post_init__(self) -> None:
        if not self.lower < self.upper:
            raise ValueError(f"linear cost needs lower < upper, got [{self.lower}, {self.upper}]")

    def __call__(self, value: float) -> float:
        u = (value - self.lower) / (self.upper - self.lower)
        return min(1.0, max(0.0, u))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


@dataclass(frozen=True)
class TableCost:
    """Piecewise-linear interpolation over (value, cost) points.

    Inputs outside the table take the cost of the nearest end point.
    """

    values: tuple[float, ...]
    costs: tuple[float, ...]
    kind: str = "table"

    def __post_init__(self) -> None:
        if len(self.values) != len(self.costs) or not self.values:
            raise ValueError("table cost needs equally many values and costs (at least one)")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("table cost values must be strictly increasing")
        if any(not 0.0 <= c <= 1.0 for c in self.costs):
            raise ValueError("table costs must lie in [0, 1]")

    @classmethod
    def from_points(cls, points: Sequence[Sequence[float]]) -> "TableCost":
        pts = sorted((float(v), float(c)) for v, c in points)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    def __call__(self, value: float) -> float:
        xs, ys = self.values, self.costs
        if value <= xs[0]:
            return ys[0]
        if value >= xs[-1]:
            return ys[-1]
        j = bisect.bisect_right(xs, value)
        x0, x1 = xs[j - 1], xs[j]
        t = (value - x0) / (x1 - x0)
        return ys[j - 1] + t * (ys[j] - ys[j - 1])

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "points": [[v, c] for v, c in zip(self.values, self.costs)]}


def cost_from_dict(spec: Mapping[str, Any], lower: float, upper: float) -> CostFunction:
    """Build a cost function from its config form, bound to a parameter's domain."""
    kind = spec.get("kind")
    if kind == "zero":
        return ZeroCost()
    if kind == "linear":
        return LinearCost(float(lower), float(upper))
    if kind == "table":
        points = spec.get("points")
        if not points:
            raise ValueError("table cost requires 'points'")
        return TableCost.from_points(points)
    raise ValueError(f"unknown cost kind {kind!r} (expected zero, linear or table)")
