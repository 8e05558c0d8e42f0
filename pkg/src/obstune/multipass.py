"""Multi-pass driver: repeated basic runs with a rising expected quality."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Literal

from .observer import BasicTunerConfig, Observer, TuneResult, basic_adjust
from .rng import STREAM_PASS, mix
from .space import HyperParamSpace, HyperParamVector, check_quality


@dataclass(frozen=True)
class ConstantStep:
    step: float = 0.05

    def __post_init__(self) -> None:
        if not 0.0 < self.step <= 1.0:
            raise ValueError(f"constant q_step must lie in (0, 1], got {self.step}")

    def __call__(self, pass_index: int) -> float:
        return self.step

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "constant", "step": self.step}


@dataclass(frozen=True)
class DecayingStep:
    """Geometric schedule ``initial * factor**pass_index``."""

    initial: float = 0.1
    factor: float = 0.5

    def __post_init__(self) -> None:
        if not self.initial > 0.0:
            raise ValueError(f"decaying q_step needs initial > 0, got {self.initial}")
        if not 0.0 < self.factor < 1.0:
            raise ValueError(f"decaying q_step needs factor in (0, 1), got {self.factor}")

    def __call__(self, pass_index: int) -> float:
        return self.initial * self.factor**pass_index

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "decaying", "initial": self.initial, "factor": self.factor}


QStepStrategy = ConstantStep | DecayingStep


def get_q_step(strategy: QStepStrategy, pass_index: int) -> float:
    if pass_index < 0:
        raise ValueError("pass_index must be >= 0")
    return strategy(pass_index)


@dataclass(frozen=True)
class MultiPassConfig:
    """Knobs for the multi-pass driver.

    ``inner`` is the template for every pass; its ``q_ex`` and ``seed`` are
    replaced per pass. With ``warm_start`` each pass after the first starts
    from the previous pass's best vector instead of a fresh random one.
    """

    q_target: float = 1.0
    q_init: float = 0.6
    step: QStepStrategy = field(default_factory=ConstantStep)
    max_stagnation: int = 3
    warm_start: bool = True
    inner: BasicTunerConfig = field(default_factory=BasicTunerConfig)

    def __post_init__(self) -> None:
        check_quality(self.q_target, "q_target")
        check_quality(self.q_init, "q_init")
        if self.q_init > self.q_target:
            raise ValueError(f"q_init ({self.q_init}) must not exceed q_target ({self.q_target})")
        if self.max_stagnation < 1:
            raise ValueError("max_stagnation must be positive")


@dataclass(frozen=True)
class PassRecord:
    index: int
    q_ex: float
    result: TuneResult
    stagnation: int

    def summary(self) -> dict[str, Any]:
        return {
            "pass": self.index,
            "q_ex": self.q_ex,
            "q_best": self.result.q_best,
            "termination": self.result.termination,
            "iterations": self.result.iterations,
            "stagnation": self.stagnation,
        }


@dataclass(frozen=True)
class MultiPassResult:
    q_best: float
    hp_best: HyperParamVector
    passes: tuple[PassRecord, ...]
    termination: Literal["target_reached", "max_stagnation"]

    @property
    def q_ex_sequence(self) -> list[float]:
        return [p.q_ex for p in self.passes]

    @property
    def total_iterations(self) -> int:
        return sum(p.result.iterations for p in self.passes)


def pass_seed(seed: int, pass_index: int) -> int:
    return mix(seed, STREAM_PASS, pass_index)


def multi_pass_adjust(observer: Observer, space: HyperParamSpace, config: MultiPassConfig) -> MultiPassResult:
    """Raise ``q_ex`` pass by pass until ``q_target`` is met or passes keep failing.

    ``q_ex`` grows by the step after every pass, successful or not, and is
    clamped at 1.0. The global best is the best pass result seen so far; the
    first pass always runs.
    """
    q_ex = config.q_init
    stagnation = 0
    q_best: float | None = None
    hp_best: HyperParamVector | None = None
    start: HyperParamVector | None = None
    passes: list[PassRecord] = []

    while (q_best is None or q_best < config.q_target) and stagnation < config.max_stagnation:
        p = len(passes)
        inner = replace(config.inner, q_ex=q_ex, seed=pass_seed(config.inner.seed, p))
        result = basic_adjust(observer, space, inner, initial=start if config.warm_start else None)
        if result.q_best < q_ex:
            stagnation += 1
        else:
            stagnation = 0
        if q_best is None or result.q_best > q_best:
            q_best, hp_best = result.q_best, result.hp_best
        passes.append(PassRecord(p, q_ex, result, stagnation))
        start = result.hp_best
        q_ex = min(q_ex + get_q_step(config.step, p), 1.0)

    assert q_best is not None and hp_best is not None
    # when both exit conditions hold, the exhausted stagnation counter is reported
    termination: Literal["target_reached", "max_stagnation"] = (
        "max_stagnation" if stagnation >= config.max_stagnation else "target_reached"
    )
    return MultiPassResult(q_best, hp_best, tuple(passes), termination)
