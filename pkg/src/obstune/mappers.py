"""Surrogate regressors: the quality mapper and the per-parameter inverse mappers.

Both families work on normalized coordinates. A quality mapper learns
``u -> quality``; the inverse mapper for parameter ``i`` learns
``(u without u_i, quality) -> u_i`` so that at query time a desired quality
can be plugged in and a value for ``u_i`` read off.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Literal, Protocol, Sequence

import numpy as np

from .experiments import ExperimentLog
from .space import HyperParamSpace, HyperParamVector, denormalize_value, normalize

MapperKind = Literal["knn", "linear"]

KNN_EPS = 1e-12
RIDGE_LAMBDA = 1e-8


class InsufficientData(ValueError):
    pass


class DegenerateDesign(ValueError):
    pass


class MapperSpaceMismatch(ValueError):
    pass


class Model(Protocol):
    def predict(self, features: Sequence[float]) -> float: ...

    def describe(self) -> str: ...


class KnnModel:
    """Inverse-distance-weighted k nearest neighbours.

    The arithmetic is pinned down so independent implementations agree bit for
    bit: squared distance accumulates feature by feature from 0.0, neighbours
    are ranked by (distance, row index), weights are ``1/(d + 1e-12)`` and both
    weighted sums accumulate in rank order. A neighbour at distance exactly 0
    short-circuits to its own target.
    """

    def __init__(self, features: np.ndarray, targets: np.ndarray, k: int = 5) -> None:
        features = np.asarray(features, dtype=float)
        targets = np.asarray(targets, dtype=float)
        if features.ndim != 2 or targets.shape != (features.shape[0],):
            raise ValueError("features must be (rows, m) and targets (rows,)")
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        if k > features.shape[0]:
            raise InsufficientData(f"k={k} exceeds the {features.shape[0]} training rows")
        self.features = features
        self.targets = targets
        self.k = k
        self._columns = [np.ascontiguousarray(features[:, j]) for j in range(features.shape[1])]

    def neighbours(self, query: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and distances of the k nearest rows, in rank order."""
        d2 = np.zeros(self.features.shape[0])
        for col, q in zip(self._columns, query):
            diff = col - q
            d2 += diff * diff
        dist = np.sqrt(d2)
        # stable sort keeps lower row index first on equal distances
        order = np.argsort(dist, kind="stable")[: self.k]
        return order, dist[order]

    def predict(self, features: Sequence[float]) -> float:
        if len(features) != self.features.shape[1]:
            raise ValueError(f"expected {self.features.shape[1]} features, got {len(features)}")
        idx, dist = self.neighbours(features)
        if dist[0] == 0.0:
            return float(self.targets[idx[0]])
        num = 0.0
        den = 0.0
        for j, d in zip(idx.tolist(), dist.tolist()):
            w = 1.0 / (d + KNN_EPS)
            num += w * float(self.targets[j])
            den += w
        return num / den

    def describe(self) -> str:
        return f"knn k={self.k} rows={self.features.shape[0]}"


class LinearModel:
    """Least squares with an intercept, solved through the normal equations.

    A ridge term ``lam`` is always added to the non-intercept diagonal, which
    keeps rank-deficient designs solvable. The ridge bias is then removed by a
    few steps of iterated refinement against the unregularized equations,
    ``beta += (G + lam I)^-1 (A'y - G beta)``; directions in the null space
    of ``G`` stay at zero.
    """

    refinement_steps = 3

    def __init__(self, features: np.ndarray, targets: np.ndarray, lam: float = RIDGE_LAMBDA) -> None:
        X = np.asarray(features, dtype=float)
        y = np.asarray(targets, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("features must be (rows, m) and targets (rows,)")
        A = np.column_stack([np.ones(X.shape[0]), X])
        gram = A.T @ A
        rhs = A.T @ y
        reg = gram.copy()
        reg[np.arange(1, reg.shape[0]), np.arange(1, reg.shape[0])] += lam
        try:
            beta = np.linalg.solve(reg, rhs)
            for _ in range(self.refinement_steps):
                beta = beta + np.linalg.solve(reg, rhs - gram @ beta)
        except np.linalg.LinAlgError as exc:
            raise DegenerateDesign(f"normal equations are singular: {exc}") from exc
        if not np.all(np.isfinite(beta)):
            raise DegenerateDesign("normal equations produced non-finite coefficients")
        self.intercept = float(beta[0])
        self.coef = beta[1:].copy()
        self.lam = lam

    def predict(self, features: Sequence[float]) -> float:
        if len(features) != self.coef.shape[0]:
            raise ValueError(f"expected {self.coef.shape[0]} features, got {len(features)}")
        return self.intercept + float(np.dot(self.coef, np.asarray(features, dtype=float)))

    def describe(self) -> str:
        coefs = " ".join(repr(float(c)) for c in self.coef)
        return f"linear intercept={self.intercept!r} coef=[{coefs}] ridge={self.lam!r}"


class FunctionModel:
    """Wraps a plain callable on normalized features; handy for stubs and tests."""

    def __init__(self, fn: Callable[[Sequence[float]], float], name: str = "function") -> None:
        self.fn = fn
        self.name = name

    def predict(self, features: Sequence[float]) -> float:
        return float(self.fn(features))

    def describe(self) -> str:
        return self.name


def _clamp01(x: float) -> float:
    if math.isnan(x):
        return 0.0
    return min(1.0, max(0.0, x))


@dataclass(frozen=True)
class QualityMapper:
    model: Model
    space: HyperParamSpace
    log_digest: str = ""

    @property
    def kind(self) -> str:
        return self.model.describe().split(" ", 1)[0]

    def predict(self, hp: HyperParamVector | Sequence[float]) -> float:
        return _clamp01(self.model.predict(normalize(self.space, hp)))

    def dump(self) -> str:
        return f"map_q {self.model.describe()} space={self.space.digest} log={self.log_digest}"


@dataclass(frozen=True)
class ParamMapper:
    index: int
    model: Model
    space: HyperParamSpace
    log_digest: str = ""

    def features(self, hp: HyperParamVector | Sequence[float], quality: float) -> list[float]:
        u = normalize(self.space, hp)
        return u[: self.index] + u[self.index + 1 :] + [quality]

    def predict_normalized(self, hp: HyperParamVector | Sequence[float], q_ex: float) -> float:
        return _clamp01(self.model.predict(self.features(hp, q_ex)))

    def predict(self, hp: HyperParamVector | Sequence[float], q_ex: float) -> float:
        """Native value proposed for coordinate ``index``; ``hp[index]`` is ignored."""
        return denormalize_value(self.space[self.index], self.predict_normalized(hp, q_ex))

    def dump(self) -> str:
        return f"map_{self.index} {self.model.describe()} space={self.space.digest} log={self.log_digest}"


def _min_rows(kind: str, n: int, k: int) -> int:
    return max(k, n + 1) if kind == "knn" else n + 1


def _build(kind: str, X: np.ndarray, y: np.ndarray, k: int) -> Model:
    if kind == "knn":
        return KnnModel(X, y, k)
    if kind == "linear":
        return LinearModel(X, y)
    raise ValueError(f"unknown mapper kind {kind!r} (expected 'knn' or 'linear')")


def _design(log: ExperimentLog, kind: str, k: int) -> tuple[np.ndarray, np.ndarray, str]:
    n = len(log.space)
    need = _min_rows(kind, n, k)
    if len(log) < need:
        raise InsufficientData(f"{kind} mapper needs at least {need} records, log has {len(log)}")
    U = np.array([normalize(log.space, r.hp) for r in log.records], dtype=float)
    q = np.array([r.quality for r in log.records], dtype=float)
    digest = hashlib.sha256(log.dumps().encode()).hexdigest()
    return U, q, digest


def fit_quality_mapper(log: ExperimentLog, kind: MapperKind = "knn", k: int = 5) -> QualityMapper:
    U, q, digest = _design(log, kind, k)
    return QualityMapper(_build(kind, U, q, k), log.space, digest)


def fit_param_mapper(log: ExperimentLog, i: int, kind: MapperKind = "knn", k: int = 5) -> ParamMapper:
    n = len(log.space)
    if not 0 <= i < n:
        raise IndexError(f"parameter index {i} out of range for a {n}-dimensional space")
    U, q, digest = _design(log, kind, k)
    X = np.column_stack([np.delete(U, i, axis=1), q])
    return ParamMapper(i, _build(kind, X, U[:, i], k), log.space, digest)


def predict_quality(m: QualityMapper, hp: HyperParamVector) -> float:
    return m.predict(hp)


def predict_param(m: ParamMapper, others: Sequence[float], q_ex: float) -> float:
    """Propose a native value for coordinate ``m.index`` from the other n-1 native values."""
    full = list(others[: m.index]) + [m.space[m.index].lower] + list(others[m.index :])
    return m.predict(full, q_ex)
