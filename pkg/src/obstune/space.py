"""Hyper-parameter spaces, vectors and the [0, 1] normalization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Literal, Sequence

from .costs import CostFunction
from .rng import SeededRandomState

Kind = Literal["continuous", "integer"]


def check_quality(value: float, what: str = "quality") -> float:
    """Return ``value`` as float if it lies in [0, 1], else raise ValueError."""
    value = float(value)
    if not 0.0 <= value <= 1.0:  # also rejects NaN
        raise ValueError(f"{what} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class ParamSpec:
    """Domain of one tunable parameter.

    Attributes:
        name: identifier, unique within a space.
        kind: ``"continuous"`` or ``"integer"``.
        lower, upper: inclusive bounds in native units.
        cost: optional cost function, consulted only by the cost-based selector.
    """

    name: str
    kind: Kind
    lower: float
    upper: float
    cost: CostFunction | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise ValueError("parameter name must be a non-empty string")
        if self.kind not in ("continuous", "integer"):
            raise ValueError(f"{self.name}: kind must be 'continuous' or 'integer', got {self.kind!r}")
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"{self.name}: bounds must be finite")
        if not lo < hi:
            raise ValueError(f"{self.name}: lower ({lo}) must be less than upper ({hi})")
        if self.kind == "integer" and not (lo.is_integer() and hi.is_integer()):
            raise ValueError(f"{self.name}: integer parameters need whole-number bounds")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        if not self.lower <= value <= self.upper:
            return False
        return self.kind == "continuous" or float(value).is_integer()

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"name": self.name, "kind": self.kind, "lower": self.lower, "upper": self.upper}
        if self.cost is not None:
            d["cost"] = self.cost.to_dict()
        return d


@dataclass(frozen=True)
class HyperParamVector:
    """One concrete assignment, in native units, ordered like its space."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]

    def __iter__(self) -> Iterator[float]:
        return iter(self.values)

    def replace(self, i: int, value: float) -> "HyperParamVector":
        vals = list(self.values)
        vals[i] = float(value)
        return HyperParamVector(tuple(vals))


class HyperParamSpace:
    """Ordered, immutable collection of :class:`ParamSpec`."""

    __slots__ = ("_params", "_digest")

    def __init__(self, params: Iterable[ParamSpec]) -> None:
        params = tuple(params)
        if not params:
            raise ValueError("a space needs at least one parameter")
        names = [p.name for p in params]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate parameter names: {', '.join(dupes)}")
        self._params = params
        canonical = json.dumps(
            [[p.name, p.kind, p.lower, p.upper] for p in params], separators=(",", ":")
        )
        self._digest = hashlib.sha256(canonical.encode()).hexdigest()

    @property
    def params(self) -> tuple[ParamSpec, ...]:
        return self._params

    @property
    def names(self) -> list[str]:
        return [p.name for p in self._params]

    @property
    def digest(self) -> str:
        """SHA-256 over names, kinds and bounds (costs excluded)."""
        return self._digest

    def __len__(self) -> int:
        return len(self._params)

    def __getitem__(self, i: int) -> ParamSpec:
        return self._params[i]

    def __iter__(self) -> Iterator[ParamSpec]:
        return iter(self._params)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HyperParamSpace) and other._digest == self._digest

    def __hash__(self) -> int:
        return hash(self._digest)

    def __repr__(self) -> str:
        inner = ", ".join(f"{p.name}:{p.kind}[{p.lower:g},{p.upper:g}]" for p in self._params)
        return f"HyperParamSpace({inner})"

    def validate(self, hp: HyperParamVector) -> None:
        if len(hp) != len(self):
            raise ValueError(f"vector has {len(hp)} values, space has {len(self)} parameters")
        for p, v in zip(self._params, hp):
            if not p.contains(v):
                raise ValueError(f"{p.name}={v!r} outside its {p.kind} domain [{p.lower}, {p.upper}]")

    def vector(self, values: Sequence[float]) -> HyperParamVector:
        hp = HyperParamVector(tuple(values))
        self.validate(hp)
        return hp

    def to_dict(self) -> list[dict[str, Any]]:
        return [p.to_dict() for p in self._params]


def sample_random(space: HyperParamSpace, rng: SeededRandomState) -> HyperParamVector:
    """Draw one vector uniformly over the native domain, coordinate by coordinate."""
    vals = []
    for p in space:
        if p.kind == "integer":
            vals.append(float(rng.randint(int(p.lower), int(p.upper))))
        else:
            vals.append(rng.uniform(p.lower, p.upper))
    return HyperParamVector(tuple(vals))


def normalize(space: HyperParamSpace, hp: HyperParamVector | Sequence[float]) -> list[float]:
    return [(v - p.lower) / p.width for p, v in zip(space, hp)]


def denormalize_value(spec: ParamSpec, u: float) -> float:
    """Map one normalized coordinate to native units, clamping to [0, 1].

    Integer kinds round to the nearest whole number with ties going up.
    """
    u = min(1.0, max(0.0, float(u)))
    v = spec.lower + u * spec.width
    if spec.kind == "integer":
        v = float(math.floor(v + 0.5))
    return min(spec.upper, max(spec.lower, v))


def denormalize(space: HyperParamSpace, u: Sequence[float]) -> HyperParamVector:
    if len(u) != len(space):
        raise ValueError(f"expected {len(space)} coordinates, got {len(u)}")
    for x in u:
        if not math.isfinite(x):
            raise ValueError(f"normalized coordinate must be finite, got {x!r}")
    return HyperParamVector(tuple(denormalize_value(p, x) for p, x in zip(space, u)))
