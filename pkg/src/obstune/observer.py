"""Evaluator ensemble, updater and the basic adjusting loop.

Each iteration asks every inverse mapper for the value of its own parameter
that should yield the expected quality ``q_ex``, scores each single-coordinate
substitution with the quality mapper, and applies the substitution the updater
picks. The loop never touches the real objective; ground truth enters only
through :func:`verify_on_objective`.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Any, Callable, Literal, Sequence

from .costs import CostFunction, ZeroCost
from .experiments import ExperimentLog, ObjectiveFailure, _checked_quality
from .mappers import (
    MapperKind,
    MapperSpaceMismatch,
    ParamMapper,
    QualityMapper,
    fit_param_mapper,
    fit_quality_mapper,
)
from .rng import SeededRandomState
from .space import HyperParamSpace, HyperParamVector, check_quality, sample_random

Termination = Literal["target_reached", "max_idle", "max_iterations"]


def contribution_basic(q_eval_i: float, q_best: float) -> float:
    return q_eval_i - q_best


def contribution_cost(q_eval_i: float, q_best: float, theta_i: Callable[[float], float], hp_eval_i: float) -> float:
    """Quality gain discounted by the cost of the proposed value."""
    return (q_eval_i - q_best) * (1.0 - theta_i(hp_eval_i))


def _first_argmax(xs: Sequence[Any]) -> int:
    # strict '<' keeps the earliest index on ties
    idx = 0
    for i in range(1, len(xs)):
        if xs[idx] < xs[i]:
            idx = i
    return idx


def select_index_basic(q_eval: Sequence[float]) -> int:
    if not q_eval:
        raise ValueError("q_eval is empty")
    return _first_argmax(q_eval)


def select_index_cost(
    q_eval: Sequence[float],
    q_best: float,
    hp_eval: Sequence[float],
    thetas: Sequence[Callable[[float], float]],
) -> int:
    """First index with the largest cost-discounted gain.

    Gains are compared in exact rational arithmetic: in floats ``q - q_best``
    can round distinct qualities to the same value, which would break the
    zero-cost equivalence with :func:`select_index_basic`.
    """
    if not q_eval or not (len(q_eval) == len(hp_eval) == len(thetas)):
        raise ValueError("q_eval, hp_eval and thetas must be non-empty and of equal length")
    best = Fraction(q_best)
    return _first_argmax(
        [(Fraction(q) - best) * (1 - Fraction(th(h))) for q, th, h in zip(q_eval, thetas, hp_eval)]
    )


@dataclass(frozen=True)
class SelectionStrategy:
    """``basic`` ranks by raw predicted quality, ``cost_based`` by cost-discounted gain."""

    kind: Literal["basic", "cost_based"] = "basic"
    thetas: tuple[CostFunction, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("basic", "cost_based"):
            raise ValueError(f"unknown strategy {self.kind!r}")
        if self.kind == "cost_based" and not self.thetas:
            raise ValueError("cost_based strategy needs one cost function per parameter")

    @classmethod
    def basic(cls) -> "SelectionStrategy":
        return cls("basic")

    @classmethod
    def cost_based(cls, thetas: Sequence[CostFunction]) -> "SelectionStrategy":
        return cls("cost_based", tuple(thetas))

    @classmethod
    def from_space(cls, space: HyperParamSpace) -> "SelectionStrategy":
        """Cost-based strategy from the costs attached to ``space`` (missing ones count as zero)."""
        return cls("cost_based", tuple(p.cost if p.cost is not None else ZeroCost() for p in space))

    def contributions(self, q_eval: Sequence[float], q_best: float, hp_eval: Sequence[float]) -> list[float]:
        if self.kind == "basic":
            return [contribution_basic(q, q_best) for q in q_eval]
        return [contribution_cost(q, q_best, th, h) for q, th, h in zip(q_eval, self.thetas, hp_eval)]

    def select(self, q_eval: Sequence[float], q_best: float, hp_eval: Sequence[float]) -> int:
        if self.kind == "basic":
            return select_index_basic(q_eval)
        return select_index_cost(q_eval, q_best, hp_eval, self.thetas)


@dataclass(frozen=True)
class BasicTunerConfig:
    q_ex: float = 1.0
    max_iterations: int = 200
    max_idle: int = 20
    min_contribution: float = 0.001
    strategy: SelectionStrategy = field(default_factory=SelectionStrategy.basic)
    seed: int = 0

    def __post_init__(self) -> None:
        check_quality(self.q_ex, "q_ex")
        check_quality(self.min_contribution, "min_contribution")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.max_idle < 1:
            raise ValueError("max_idle must be positive")


@dataclass(frozen=True)
class IterationTrace:
    iteration: int
    hp_before: tuple[float, ...]
    hp_eval: tuple[float, ...]
    q_eval: tuple[float, ...]
    contributions: tuple[float, ...]
    chosen: int
    accepted: bool
    q_best: float
    idle: int

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for key in ("hp_before", "hp_eval", "q_eval", "contributions"):
            d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class TuneResult:
    q_best: float
    hp_best: HyperParamVector
    trajectory: tuple[IterationTrace, ...]
    termination: Termination
    q_initial: float
    hp_initial: HyperParamVector
    q_ex: float
    min_contribution: float

    @property
    def iterations(self) -> int:
        return len(self.trajectory)

    def summary(self) -> dict[str, Any]:
        return {
            "q_best": self.q_best,
            "hp_best": list(self.hp_best.values),
            "termination": self.termination,
            "iterations": self.iterations,
            "q_initial": self.q_initial,
            "hp_initial": list(self.hp_initial.values),
            "q_ex": self.q_ex,
        }

    def dumps(self) -> str:
        d = self.summary()
        d["trajectory"] = [t.to_dict() for t in self.trajectory]
        return json.dumps(d, sort_keys=True)


@dataclass(frozen=True)
class Observer:
    """Fitted ensemble: one inverse mapper per parameter plus the shared quality mapper."""

    space: HyperParamSpace
    quality_mapper: QualityMapper
    param_mappers: tuple[ParamMapper, ...]

    def __post_init__(self) -> None:
        if len(self.param_mappers) != len(self.space):
            raise ValueError(f"need {len(self.space)} parameter mappers, got {len(self.param_mappers)}")
        for i, m in enumerate(self.param_mappers):
            if m.index != i:
                raise ValueError(f"parameter mapper at position {i} is for index {m.index}")
        for m in (self.quality_mapper, *self.param_mappers):
            if m.space.digest != self.space.digest:
                raise MapperSpaceMismatch("mapper was fitted over a different space")

    @property
    def n(self) -> int:
        return len(self.space)

    def quality(self, hp: Sequence[float]) -> float:
        return self.quality_mapper.predict(hp)

    def propose(self, i: int, hp: Sequence[float], q_ex: float) -> float:
        return self.param_mappers[i].predict(hp, q_ex)

    def dump(self) -> str:
        return "\n".join(m.dump() for m in (self.quality_mapper, *self.param_mappers)) + "\n"


def fit_observer(log: ExperimentLog, kind: MapperKind = "knn", k: int = 5) -> Observer:
    qm = fit_quality_mapper(log, kind, k)
    pms = tuple(fit_param_mapper(log, i, kind, k) for i in range(len(log.space)))
    return Observer(log.space, qm, pms)


def basic_adjust(
    observer: Observer,
    space: HyperParamSpace,
    config: BasicTunerConfig,
    initial: HyperParamVector | None = None,
) -> TuneResult:
    """Run the single-pass adjusting loop against the fitted mappers.

    ``initial`` replaces the seeded random starting point (used for warm
    starts). Acceptance compares the raw predicted gain of the chosen
    coordinate with ``min_contribution`` even under the cost-based strategy;
    cost only affects which coordinate is chosen.
    """
    if observer.space.digest != space.digest:
        raise MapperSpaceMismatch("observer was fitted over a different space")
    strategy = config.strategy
    if strategy.kind == "cost_based" and len(strategy.thetas) != len(space):
        raise ValueError(f"cost_based strategy has {len(strategy.thetas)} cost functions for {len(space)} parameters")
    n = len(space)

    if initial is None:
        hp = sample_random(space, SeededRandomState(config.seed))
    else:
        space.validate(initial)
        hp = initial
    hp_initial = hp
    hp_best = hp
    iterations = 0
    idle = 0
    q_best = observer.quality(hp)
    q_initial = q_best
    trajectory: list[IterationTrace] = []

    while q_best < config.q_ex and idle < config.max_idle and iterations < config.max_iterations:
        hp_eval = [observer.propose(i, hp, config.q_ex) for i in range(n)]
        q_eval = [observer.quality(hp.replace(i, hp_eval[i])) for i in range(n)]
        contributions = strategy.contributions(q_eval, q_best, hp_eval)
        idx = strategy.select(q_eval, q_best, hp_eval)

        hp_before = hp
        hp = hp.replace(idx, hp_eval[idx])
        accepted = q_eval[idx] - q_best > config.min_contribution
        if accepted:
            q_best = q_eval[idx]
            hp_best = hp
            idle = 0
        else:
            idle += 1
        trajectory.append(
            IterationTrace(
                iteration=iterations,
                hp_before=hp_before.values,
                hp_eval=tuple(hp_eval),
                q_eval=tuple(q_eval),
                contributions=tuple(contributions),
                chosen=idx,
                accepted=accepted,
                q_best=q_best,
                idle=idle,
            )
        )
        iterations += 1

    if not q_best < config.q_ex:
        termination: Termination = "target_reached"
    elif not idle < config.max_idle:
        termination = "max_idle"
    else:
        termination = "max_iterations"
    return TuneResult(
        q_best=q_best,
        hp_best=hp_best,
        trajectory=tuple(trajectory),
        termination=termination,
        q_initial=q_initial,
        hp_initial=hp_initial,
        q_ex=config.q_ex,
        min_contribution=config.min_contribution,
    )


def verify_on_objective(
    result: TuneResult,
    objective: Callable[[HyperParamVector], float],
    log: ExperimentLog | None = None,
) -> float:
    """True quality at ``result.hp_best``; the call is charged to ``log`` if given.

    A gap between this and the surrogate ``q_best`` is an outcome, not an error.
    """
    if log is not None:
        log.record_evaluation()
    try:
        value = objective(result.hp_best)
    except Exception as exc:
        raise ObjectiveFailure(-1, exc) from exc
    return _checked_quality(value, -1)
