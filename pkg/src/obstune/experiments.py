"""Bootstrap phase: seeded random experiments against the black-box objective."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Protocol, runtime_checkable

from .rng import STREAM_BOOTSTRAP, SeededRandomState, mix
from .space import HyperParamSpace, HyperParamVector, sample_random

SCHEMA_VERSION = 1


class ObjectiveFailure(RuntimeError):
    """The objective raised while evaluating record ``index``.

    ``log`` holds the records completed before the failure.
    """

    def __init__(self, index: int, cause: BaseException, log: "ExperimentLog | None" = None) -> None:
        super().__init__(f"objective failed at record {index}: {cause!r}")
        self.index = index
        self.cause = cause
        self.log = log


class ObjectiveContractError(ObjectiveFailure):
    """The objective returned a value outside [0, 1] (or not a number)."""

    def __init__(self, index: int, value: Any, log: "ExperimentLog | None" = None) -> None:
        RuntimeError.__init__(self, f"objective returned {value!r} at record {index}; quality must lie in [0, 1]")
        self.index = index
        self.cause = None
        self.value = value
        self.log = log


@runtime_checkable
class Objective(Protocol):
    """Anything callable on a vector that returns a quality in [0, 1].

    Optional attributes: ``serial`` (bool, default True means "do not call
    me from several threads") and ``cost_note`` ("cheap"/"expensive").
    """

    def __call__(self, hp: HyperParamVector) -> float: ...


def _checked_quality(value: Any, index: int) -> float:
    try:
        q = float(value)
    except (TypeError, ValueError):
        raise ObjectiveContractError(index, value) from None
    if not (math.isfinite(q) and 0.0 <= q <= 1.0):
        raise ObjectiveContractError(index, value)
    return q


@dataclass(frozen=True)
class ExperimentRecord:
    index: int
    hp: HyperParamVector
    quality: float


@dataclass
class ExperimentLog:
    """Bootstrap evidence plus an evaluation counter.

    ``extra_evaluations`` counts true-objective calls made after the bootstrap
    (verification of tuned results); it feeds :func:`evaluation_budget`.
    """

    space: HyperParamSpace
    seed: int
    records: list[ExperimentRecord] = field(default_factory=list)
    extra_evaluations: int = 0

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ExperimentRecord]:
        return iter(self.records)

    def append(self, hp: HyperParamVector, quality: float) -> ExperimentRecord:
        self.space.validate(hp)
        rec = ExperimentRecord(len(self.records), hp, _checked_quality(quality, len(self.records)))
        self.records.append(rec)
        return rec

    def record_evaluation(self, count: int = 1) -> None:
        self.extra_evaluations += count

    @property
    def best(self) -> ExperimentRecord | None:
        """First record with the highest quality."""
        best = None
        for rec in self.records:
            if best is None or rec.quality > best.quality:
                best = rec
        return best

    def header(self) -> dict[str, Any]:
        return {"schema_version": SCHEMA_VERSION, "seed": self.seed, "space_digest": self.space.digest}

    def dumps(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        for rec in self.records:
            lines.append(
                json.dumps({"index": rec.index, "values": list(rec.hp.values), "quality": rec.quality}, sort_keys=True)
            )
        return "\n".join(lines) + "\n"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.dumps())
        return path

    @classmethod
    def read(cls, path: str | Path, space: HyperParamSpace) -> "ExperimentLog":
        lines = Path(path).read_text().splitlines()
        if not lines:
            raise ValueError(f"{path}: empty experiment log")
        header = json.loads(lines[0])
        if header.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema_version {header.get('schema_version')!r}")
        if header.get("space_digest") != space.digest:
            raise ValueError(f"{path}: log was recorded over a different space")
        log = cls(space=space, seed=int(header["seed"]))
        for lineno, line in enumerate(lines[1:], start=2):
            row = json.loads(line)
            if row["index"] != len(log.records):
                raise ValueError(f"{path}:{lineno}: expected index {len(log.records)}, found {row['index']}")
            log.append(space.vector(row["values"]), row["quality"])
        return log


def record_seed(seed: int, index: int) -> int:
    """Substream seed for bootstrap record ``index``."""
    return mix(seed, STREAM_BOOTSTRAP, index)


def draw_bootstrap_point(space: HyperParamSpace, seed: int, index: int) -> HyperParamVector:
    return sample_random(space, SeededRandomState(record_seed(seed, index)))


def run_bootstrap(
    space: HyperParamSpace,
    objective: Callable[[HyperParamVector], float],
    count: int,
    seed: int,
    workers: int = 1,
) -> ExperimentLog:
    """Evaluate ``count`` seeded random points and collect them into a log.

    Record ``i`` draws its point from its own substream ``mix(seed, 1, i)``,
    so the result does not depend on ``workers``. Objectives that declare
    ``serial = True`` always run sequentially.

    Raises:
        ObjectiveFailure: the objective raised; ``err.log`` holds the records
            preceding the failing index.
        ObjectiveContractError: the objective returned something outside [0, 1].
    """
    if count < 1:
        raise ValueError(f"bootstrap count must be >= 1, got {count}")
    log = ExperimentLog(space=space, seed=seed)
    points = [draw_bootstrap_point(space, seed, i) for i in range(count)]

    def evaluate(i: int) -> float:
        try:
            value = objective(points[i])
        except Exception as exc:
            raise ObjectiveFailure(i, exc) from exc
        return _checked_quality(value, i)

    serial = getattr(objective, "serial", True) or workers <= 1
    if serial:
        for i in range(count):
            try:
                q = evaluate(i)
            except ObjectiveFailure as err:
                err.log = log
                raise
            log.records.append(ExperimentRecord(i, points[i], q))
        return log

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(evaluate, i) for i in range(count)]
        for i, fut in enumerate(futures):
            try:
                q = fut.result()
            except ObjectiveFailure as err:
                for f in futures[i + 1 :]:
                    f.cancel()
                err.log = log
                raise
            log.records.append(ExperimentRecord(i, points[i], q))
    return log


def evaluation_budget(log: ExperimentLog) -> int:
    """True-objective calls accounted to this log (bootstrap + verifications)."""
    return len(log.records) + log.extra_evaluations
