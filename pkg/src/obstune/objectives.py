"""Analytic stand-ins for the tuned algorithm.

All landscapes are defined on normalized coordinates ``u`` in [0, 1]^n and
return a quality in [0, 1].
"""

from __future__ import annotations

import hashlib
import math
import struct
import threading
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

from .rng import STREAM_NOISE, SeededRandomState, mix
from .space import HyperParamSpace, HyperParamVector, normalize

CANONICAL_CENTER = (0.3, 0.7)
CANONICAL_WIDTH = 0.08


def _sqdist(u: Sequence[float], c: Sequence[float]) -> float:
    return sum((a - b) ** 2 for a, b in zip(u, c))


class SyntheticObjective:
    kind = "synthetic"
    serial = False
    cost_note = "cheap"

    def __init__(self, space: HyperParamSpace) -> None:
        self.space = space

    def value_at(self, u: Sequence[float]) -> float:
        raise NotImplementedError

    def __call__(self, hp: HyperParamVector) -> float:
        return self.value_at(normalize(self.space, hp))

    def optimum(self) -> tuple[float, ...] | None:
        """Normalized location of the global maximum, when known in closed form."""
        return None


class GaussianBump(SyntheticObjective):
    """``exp(-|u - center|^2 / width)``; exactly 1.0 at the center."""

    kind = "gaussian_bump"

    def __init__(self, space: HyperParamSpace, center: Sequence[float], width: float) -> None:
        super().__init__(space)
        if len(center) != len(space):
            raise ValueError(f"center has {len(center)} coordinates, space has {len(space)}")
        if width <= 0:
            raise ValueError("width must be positive")
        self.center = tuple(float(c) for c in center)
        self.width = float(width)

    def value_at(self, u: Sequence[float]) -> float:
        return math.exp(-_sqdist(u, self.center) / self.width)

    def optimum(self) -> tuple[float, ...]:
        return self.center


@dataclass(frozen=True)
class Bump:
    center: tuple[float, ...]
    width: float
    height: float


class MultiBump(SyntheticObjective):
    """Upper envelope of several weighted Gaussian bumps; the tallest must have height 1."""

    kind = "multi_bump"

    def __init__(self, space: HyperParamSpace, bumps: Sequence[Bump]) -> None:
        super().__init__(space)
        if not bumps:
            raise ValueError("multi_bump needs at least one bump")
        for b in bumps:
            if len(b.center) != len(space):
                raise ValueError("bump center dimension does not match the space")
            if b.width <= 0 or not 0.0 < b.height <= 1.0:
                raise ValueError("bump widths must be positive and heights in (0, 1]")
        if max(b.height for b in bumps) != 1.0:
            raise ValueError("the tallest bump must have height 1.0")
        self.bumps = tuple(bumps)

    def value_at(self, u: Sequence[float]) -> float:
        return max(b.height * math.exp(-_sqdist(u, b.center) / b.width) for b in self.bumps)

    def optimum(self) -> tuple[float, ...]:
        return next(b.center for b in self.bumps if b.height == 1.0)


class PlateauStep(SyntheticObjective):
    """``high`` where the mean normalized coordinate reaches ``threshold``, else ``low``."""

    kind = "plateau_step"

    def __init__(self, space: HyperParamSpace, threshold: float = 0.5, low: float = 0.2, high: float = 0.9) -> None:
        super().__init__(space)
        if not (0.0 <= low <= 1.0 and 0.0 <= high <= 1.0):
            raise ValueError("plateau levels must lie in [0, 1]")
        self.threshold, self.low, self.high = float(threshold), float(low), float(high)

    def value_at(self, u: Sequence[float]) -> float:
        return self.high if sum(u) / len(u) >= self.threshold else self.low


class NoisyBump(GaussianBump):
    """Gaussian bump plus seeded additive noise, clamped to [0, 1].

    The noise is a pure function of ``(seed, hp)``: re-evaluating the same
    vector returns the same value.
    """

    kind = "noisy_bump"

    def __init__(
        self, space: HyperParamSpace, center: Sequence[float], width: float, noise_sd: float, seed: int
    ) -> None:
        super().__init__(space, center, width)
        if noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        self.noise_sd = float(noise_sd)
        self.seed = int(seed)

    def __call__(self, hp: HyperParamVector) -> float:
        raw = struct.pack(f"<{len(hp)}d", *hp.values)
        key = int.from_bytes(hashlib.sha256(raw).digest()[:8], "little")
        noise = SeededRandomState(mix(self.seed, STREAM_NOISE, key)).gauss(0.0, self.noise_sd)
        return min(1.0, max(0.0, self.value_at(normalize(self.space, hp)) + noise))


class CountingObjective:
    """Thread-safe call counter around any objective."""

    def __init__(self, objective: Callable[[HyperParamVector], float]) -> None:
        self.objective = objective
        self.calls = 0
        self._lock = threading.Lock()
        self.serial = getattr(objective, "serial", True)
        self.cost_note = getattr(objective, "cost_note", "expensive")

    def __call__(self, hp: HyperParamVector) -> float:
        with self._lock:
            self.calls += 1
        return self.objective(hp)


def eval_objective(obj: Callable[[HyperParamVector], float], hp: HyperParamVector) -> float:
    return obj(hp)


def canonical_objective(space: HyperParamSpace) -> GaussianBump:
    return GaussianBump(space, CANONICAL_CENTER, CANONICAL_WIDTH)


def objective_from_dict(space: HyperParamSpace, spec: Mapping[str, Any], default_seed: int = 0) -> SyntheticObjective:
    """Build an objective from its config table (see ``docs/config.md``)."""
    kind = spec.get("kind")
    n = len(space)
    if kind == "gaussian_bump":
        return GaussianBump(space, spec.get("center", [0.5] * n), spec.get("width", CANONICAL_WIDTH))
    if kind == "noisy_bump":
        return NoisyBump(
            space,
            spec.get("center", [0.5] * n),
            spec.get("width", CANONICAL_WIDTH),
            spec.get("noise_sd", 0.05),
            spec.get("seed", default_seed),
        )
    if kind == "multi_bump":
        bumps = [
            Bump(tuple(float(c) for c in b["center"]), float(b.get("width", CANONICAL_WIDTH)), float(b.get("height", 1.0)))
            for b in spec.get("bumps", [])
        ]
        return MultiBump(space, bumps)
    if kind == "plateau_step":
        return PlateauStep(space, spec.get("threshold", 0.5), spec.get("low", 0.2), spec.get("high", 0.9))
    raise ValueError(f"unknown objective kind {kind!r}")
