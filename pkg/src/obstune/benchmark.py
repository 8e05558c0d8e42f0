"""Baseline searchers and an equal-budget comparison harness."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from statistics import fmean
from typing import Any, Callable, Literal, Sequence

from .experiments import evaluation_budget, run_bootstrap
from .mappers import MapperKind
from .multipass import MultiPassConfig, multi_pass_adjust
from .objectives import CountingObjective
from .observer import BasicTunerConfig, fit_observer, verify_on_objective, basic_adjust
from .rng import STREAM_BASELINE, STREAM_LOOP, SeededRandomState, mix
from .space import HyperParamSpace, HyperParamVector, denormalize, sample_random

Objective = Callable[[HyperParamVector], float]


@dataclass(frozen=True)
class BaselineSearcher:
    kind: Literal["random_search", "grid_search"]
    budget: int
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("random_search", "grid_search"):
            raise ValueError(f"unknown baseline {self.kind!r}")
        if self.budget < 1:
            raise ValueError("budget must be >= 1")


@dataclass(frozen=True)
class BaselineResult:
    hp_best: HyperParamVector
    q_best: float
    budget_used: int


def grid_points_per_axis(budget: int, n: int) -> int:
    """Largest m with m**n <= budget."""
    m = 1
    while (m + 1) ** n <= budget:
        m += 1
    return m


def grid_lattice(space: HyperParamSpace, m: int) -> list[HyperParamVector]:
    """Axis-aligned lattice with ``m`` evenly spaced nodes per axis (the midpoint when m == 1)."""
    axis = [0.5] if m == 1 else [j / (m - 1) for j in range(m)]
    n = len(space)
    points = []
    for flat in range(m**n):
        u = []
        for _ in range(n):
            flat, r = divmod(flat, m)
            u.append(axis[r])
        points.append(denormalize(space, u))
    return points


def run_baseline(searcher: BaselineSearcher, space: HyperParamSpace, obj: Objective) -> BaselineResult:
    """Run a baseline and return its best point; ties keep the earliest evaluation."""
    if searcher.kind == "random_search":
        rng = SeededRandomState(mix(searcher.seed, STREAM_BASELINE))
        candidates = (sample_random(space, rng) for _ in range(searcher.budget))
    else:
        m = grid_points_per_axis(searcher.budget, len(space))
        candidates = iter(grid_lattice(space, m))
    best_hp, best_q, used = None, -1.0, 0
    for hp in candidates:
        q = obj(hp)
        used += 1
        if q > best_q:
            best_hp, best_q = hp, q
    assert best_hp is not None
    return BaselineResult(best_hp, best_q, used)


@dataclass(frozen=True)
class ObserverSettings:
    """How the observer method spends its budget: everything but one call on bootstrap."""

    mapper_kind: MapperKind = "knn"
    k: int = 5
    tuner: BasicTunerConfig | MultiPassConfig = field(default_factory=BasicTunerConfig)
    workers: int = 1


def run_observer_method(
    space: HyperParamSpace, obj: Objective, budget: int, seed: int, settings: ObserverSettings
) -> tuple[float, int]:
    """Bootstrap ``budget - 1`` points, tune on the surrogate, verify once. Returns (true quality, calls)."""
    if budget < 2:
        raise ValueError("the observer needs a budget of at least 2 (bootstrap + verification)")
    log = run_bootstrap(space, obj, budget - 1, seed, workers=settings.workers)
    observer = fit_observer(log, settings.mapper_kind, settings.k)
    loop_seed = mix(seed, STREAM_LOOP)
    if isinstance(settings.tuner, MultiPassConfig):
        cfg = replace(settings.tuner, inner=replace(settings.tuner.inner, seed=loop_seed))
        result = multi_pass_adjust(observer, space, cfg)
        best = result.passes[0].result
        for p in result.passes:
            if p.result.q_best == result.q_best:
                best = p.result
                break
    else:
        best = basic_adjust(observer, space, replace(settings.tuner, seed=loop_seed))
    q = verify_on_objective(best, obj, log)
    return q, evaluation_budget(log)


@dataclass(frozen=True)
class ComparisonRow:
    method: str
    mean: float
    min: float
    max: float
    budget: int
    qualities: tuple[float, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "budget": self.budget,
            "qualities": list(self.qualities),
        }


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]
    seeds: tuple[int, ...]
    budget: int

    def row(self, method: str) -> ComparisonRow:
        return next(r for r in self.rows if r.method == method)

    def to_text(self) -> str:
        header = ("method", "mean", "min", "max", "budget")
        body = [(r.method, f"{r.mean:.4f}", f"{r.min:.4f}", f"{r.max:.4f}", str(r.budget)) for r in self.rows]
        widths = [max(len(x) for x in col) for col in zip(header, *body)]
        lines = ["  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(line, widths))) for line in (header, *body)]
        lines.append(f"seeds: {len(self.seeds)}  budget per run: {self.budget}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"budget": self.budget, "seeds": list(self.seeds), "rows": [r.to_dict() for r in self.rows]},
            sort_keys=True,
            indent=2,
        ) + "\n"


def compare_tuners(
    space: HyperParamSpace,
    obj: Objective,
    budget: int,
    seeds: Sequence[int],
    methods: Sequence[str] = ("observer", "random_search", "grid_search"),
    settings: ObserverSettings | None = None,
) -> ComparisonTable:
    """Run every method once per seed at the same true-evaluation budget.

    Each run goes through a counting wrapper; a run whose call count differs
    from its declared budget raises ``RuntimeError``.
    """
    settings = settings or ObserverSettings()
    rows = []
    for method in methods:
        qualities = []
        used_budget = None
        for seed in seeds:
            counter = CountingObjective(obj)
            if method == "observer":
                q, used = run_observer_method(space, counter, budget, seed, settings)
            elif method in ("random_search", "grid_search"):
                res = run_baseline(BaselineSearcher(method, budget, seed), space, counter)  # type: ignore[arg-type]
                q, used = res.q_best, res.budget_used
            else:
                raise ValueError(f"unknown method {method!r}")
            if used != counter.calls:
                raise RuntimeError(f"{method}: reported budget {used} but objective was called {counter.calls} times")
            used_budget = used
            qualities.append(q)
        assert used_budget is not None
        rows.append(ComparisonRow(method, fmean(qualities), min(qualities), max(qualities), used_budget, tuple(qualities)))
    return ComparisonTable(tuple(rows), tuple(seeds), budget)
