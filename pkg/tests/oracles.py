"""Independent reference computations used by the tests.

Nothing here imports the library's regression or search code; the oracles
re-derive results from first principles in plain Python.
"""

from __future__ import annotations

import math
from typing import Sequence


def brute_force_knn(
    rows: Sequence[Sequence[float]], targets: Sequence[float], query: Sequence[float], k: int, eps: float = 1e-12
) -> float:
    """Exhaustive-sort inverse-distance-weighted k-NN.

    Distances accumulate feature by feature from 0.0; all rows are sorted by
    (distance, row index); sums run in that order.
    """
    dists = []
    for idx, row in enumerate(rows):
        s = 0.0
        for a, b in zip(row, query):
            s += (a - b) * (a - b)
        dists.append((math.sqrt(s), idx))
    dists.sort()
    nearest = dists[:k]
    if nearest[0][0] == 0.0:
        return float(targets[nearest[0][1]])
    num = 0.0
    den = 0.0
    for d, idx in nearest:
        w = 1.0 / (d + eps)
        num += w * targets[idx]
        den += w
    return num / den


def dense_grid_max(fn, n: int, points_per_axis: int) -> float:
    """Maximum of ``fn`` over a regular grid on [0, 1]^n (including both ends)."""
    best = -math.inf
    m = points_per_axis
    for flat in range(m**n):
        u = []
        for _ in range(n):
            flat, r = divmod(flat, m)
            u.append(r / (m - 1))
        best = max(best, fn(u))
    return best


def first_argmax(xs: Sequence[float]) -> int:
    best = max(xs)
    return next(i for i, x in enumerate(xs) if x == best)
