"""End-to-end sessions: bootstrap, fit, tune, verify, persist."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Sequence

from .benchmark import ComparisonTable, ObserverSettings, compare_tuners
from .config import SessionConfig
from .experiments import ExperimentLog, evaluation_budget, run_bootstrap
from .multipass import MultiPassResult, multi_pass_adjust
from .objectives import CountingObjective
from .observer import TuneResult, basic_adjust, fit_observer, verify_on_objective
from .rng import STREAM_LOOP, mix

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
EXPERIMENTS_FILE = "experiments.log"
TRAJECTORY_FILE = "trajectory.log"
REPORT_FILE = "report.json"
MAPPERS_FILE = "mappers.txt"
COMPARISON_TEXT = "comparison.txt"
COMPARISON_JSON = "comparison.json"


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def _line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, sort_keys=True)


def trajectory_lines(
    config: SessionConfig, passes: Sequence[tuple[float, TuneResult, int | None]]
) -> list[str]:
    """Serialize one or more basic runs as line-delimited records.

    Record types: one ``header``, then per pass a ``pass`` record, its
    ``iteration`` records and a ``pass_end`` record.
    """
    tuner = config.tuner
    lines = [
        _line(
            {
                "type": "header",
                "schema_version": SCHEMA_VERSION,
                "space_digest": config.space.digest,
                "mode": config.mode,
                "strategy": tuner.strategy.kind,
                "min_contribution": tuner.min_contribution,
                "max_idle": tuner.max_idle,
                "max_iterations": tuner.max_iterations,
            }
        )
    ]
    for p, (q_ex, result, stagnation) in enumerate(passes):
        lines.append(
            _line(
                {
                    "type": "pass",
                    "pass": p,
                    "q_ex": q_ex,
                    "hp_initial": list(result.hp_initial.values),
                    "q_initial": result.q_initial,
                }
            )
        )
        for t in result.trajectory:
            rec = t.to_dict()
            rec.update(type="iteration", **{"pass": p})
            lines.append(_line(rec))
        end = {
            "type": "pass_end",
            "pass": p,
            "q_best": result.q_best,
            "hp_best": list(result.hp_best.values),
            "termination": result.termination,
            "iterations": result.iterations,
        }
        if stagnation is not None:
            end["stagnation"] = stagnation
        lines.append(_line(end))
    return lines


def read_trajectory(path: str | Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]


def check_trajectory(records: Iterable[dict[str, Any]]) -> list[str]:
    """Replay a trajectory log and list every inconsistency found (empty means consistent).

    Recomputes q_best, acceptance, idle counts, selection, the unconditional
    coordinate update and each pass's termination reason from the records alone.
    """
    problems: list[str] = []
    records = list(records)
    if not records or records[0].get("type") != "header":
        return ["missing header record"]
    header = records[0]
    min_c = header["min_contribution"]
    max_idle = header["max_idle"]
    max_iter = header["max_iterations"]
    basic = header["strategy"] == "basic"

    state: dict[str, Any] | None = None
    for lineno, rec in enumerate(records[1:], start=2):
        kind = rec.get("type")
        where = f"line {lineno}"
        if kind == "pass":
            state = {
                "pass": rec["pass"],
                "q_ex": rec["q_ex"],
                "q_best": rec["q_initial"],
                "hp": list(rec["hp_initial"]),
                "hp_best": list(rec["hp_initial"]),
                "idle": 0,
                "iterations": 0,
            }
            continue
        if state is None:
            problems.append(f"{where}: {kind} record outside a pass")
            continue
        if kind == "iteration":
            if not (state["q_best"] < state["q_ex"] and state["idle"] < max_idle and state["iterations"] < max_iter):
                problems.append(f"{where}: iteration ran although the loop condition was false")
            if rec["iteration"] != state["iterations"]:
                problems.append(f"{where}: iteration index {rec['iteration']} != {state['iterations']}")
            if rec["hp_before"] != state["hp"]:
                problems.append(f"{where}: hp_before does not continue from the previous update")
            contrib = rec["contributions"]
            if basic and contrib != [q - state["q_best"] for q in rec["q_eval"]]:
                problems.append(f"{where}: contributions are not q_eval - q_best")
            chosen = rec["chosen"]
            if basic:
                q_eval = rec["q_eval"]
                idx = next(i for i, q in enumerate(q_eval) if q == max(q_eval))
                if chosen != idx:
                    problems.append(f"{where}: chosen index {chosen} but first argmax of q_eval is {idx}")
            elif contrib[chosen] != max(contrib):
                # cost-based selection compares exact gains, so only maximality is checkable from floats
                problems.append(f"{where}: chosen index {chosen} does not attain the largest contribution")
            accepted = rec["q_eval"][chosen] - state["q_best"] > min_c
            if rec["accepted"] != accepted:
                problems.append(f"{where}: accepted={rec['accepted']} but the gain test gives {accepted}")
            state["hp"] = list(rec["hp_before"])
            state["hp"][chosen] = rec["hp_eval"][chosen]
            if accepted:
                state["q_best"] = rec["q_eval"][chosen]
                state["hp_best"] = list(state["hp"])
                state["idle"] = 0
            else:
                state["idle"] += 1
            if rec["q_best"] != state["q_best"]:
                problems.append(f"{where}: q_best {rec['q_best']} != replayed {state['q_best']}")
            if rec["idle"] != state["idle"]:
                problems.append(f"{where}: idle {rec['idle']} != replayed {state['idle']}")
            state["iterations"] += 1
        elif kind == "pass_end":
            if rec["q_best"] != state["q_best"]:
                problems.append(f"{where}: pass q_best {rec['q_best']} != replayed {state['q_best']}")
            if rec["hp_best"] != state["hp_best"]:
                problems.append(f"{where}: pass hp_best differs from replay")
            if rec["iterations"] != state["iterations"]:
                problems.append(f"{where}: pass iterations {rec['iterations']} != replayed {state['iterations']}")
            if not state["q_best"] < state["q_ex"]:
                expected = "target_reached"
            elif not state["idle"] < max_idle:
                expected = "max_idle"
            else:
                expected = "max_iterations"
            if rec["termination"] != expected:
                problems.append(f"{where}: termination {rec['termination']} but replay gives {expected}")
            state = None
        else:
            problems.append(f"{where}: unknown record type {kind!r}")
    if state is not None:
        problems.append("log ends inside a pass")
    return problems


class ConsistencyError(RuntimeError):
    pass


@dataclass
class SessionOutcome:
    report: dict[str, Any]
    out_dir: Path
    result: TuneResult | MultiPassResult
    log: ExperimentLog


def loop_seed(seed: int) -> int:
    return mix(seed, STREAM_LOOP)


def run_session(config: SessionConfig, out_dir: Path) -> SessionOutcome:
    """Run one tuning session and write its artifacts into ``out_dir``.

    Raises ObjectiveFailure (after persisting the partial experiment log),
    InsufficientData, or ConsistencyError if the written trajectory fails replay.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    timings: dict[str, float] = {}
    objective = CountingObjective(config.build_objective())
    if "serial" in config.objective:
        objective.serial = config.objective["serial"]

    t0 = time.perf_counter()
    try:
        exp_log = run_bootstrap(config.space, objective, config.bootstrap_count, config.bootstrap_seed, config.workers)
    except Exception as exc:
        partial = getattr(exc, "log", None)
        if partial is not None:
            partial.write(out_dir / EXPERIMENTS_FILE)
        raise
    timings["bootstrap_s"] = time.perf_counter() - t0
    exp_text = exp_log.dumps()
    (out_dir / EXPERIMENTS_FILE).write_text(exp_text)
    log.info("bootstrap: %d records, best recorded quality %.4f", len(exp_log), exp_log.best.quality)

    t0 = time.perf_counter()
    observer = fit_observer(exp_log, config.mapper_kind, config.k)  # type: ignore[arg-type]
    timings["fit_s"] = time.perf_counter() - t0
    (out_dir / MAPPERS_FILE).write_text(observer.dump())

    t0 = time.perf_counter()
    tuner = replace(config.tuner, seed=loop_seed(config.seed))
    result: TuneResult | MultiPassResult
    if config.mode == "multi_pass":
        assert config.multi_pass is not None
        result = multi_pass_adjust(observer, config.space, replace(config.multi_pass, inner=tuner))
        passes = [(p.q_ex, p.result, p.stagnation) for p in result.passes]
        best_run = next(p.result for p in result.passes if p.result.q_best == result.q_best)
    else:
        result = basic_adjust(observer, config.space, tuner)
        passes = [(tuner.q_ex, result, None)]
        best_run = result
    timings["tune_s"] = time.perf_counter() - t0

    traj_text = "\n".join(trajectory_lines(config, passes)) + "\n"
    (out_dir / TRAJECTORY_FILE).write_text(traj_text)
    problems = check_trajectory(read_trajectory(out_dir / TRAJECTORY_FILE))
    if problems:
        raise ConsistencyError("trajectory replay failed: " + "; ".join(problems[:5]))

    t0 = time.perf_counter()
    verified = verify_on_objective(best_run, objective, exp_log)
    timings["verify_s"] = time.perf_counter() - t0

    budget = evaluation_budget(exp_log)
    if budget != objective.calls:
        raise ConsistencyError(f"budget ledger says {budget} evaluations, objective saw {objective.calls}")

    if isinstance(result, MultiPassResult):
        summary = {
            "q_best": result.q_best,
            "hp_best": list(result.hp_best.values),
            "termination": result.termination,
            "iterations": result.total_iterations,
            "passes": [p.summary() for p in result.passes],
        }
    else:
        summary = result.summary()
    report = {
        "schema_version": SCHEMA_VERSION,
        "config_digest": config.digest,
        "overrides": config.overrides,
        "seed": config.seed,
        "mode": config.mode,
        "strategy": config.tuner.strategy.kind,
        "space": config.space.to_dict(),
        "space_digest": config.space.digest,
        "experiment_log": {"path": EXPERIMENTS_FILE, "digest": _sha256(exp_text), "records": len(exp_log)},
        "trajectory_log": {"path": TRAJECTORY_FILE, "digest": _sha256(traj_text)},
        "result": summary,
        "surrogate_q_best": result.q_best,
        "verified_quality": verified,
        "surrogate_gap": result.q_best - verified,
        "evaluation_budget": budget,
        "timings": timings,
    }
    (out_dir / REPORT_FILE).write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return SessionOutcome(report, out_dir, result, exp_log)


def run_compare(config: SessionConfig, out_dir: Path) -> ComparisonTable:
    out_dir.mkdir(parents=True, exist_ok=True)
    tuner = config.multi_pass if config.mode == "multi_pass" else config.tuner
    settings = ObserverSettings(config.mapper_kind, config.k, tuner, config.workers)  # type: ignore[arg-type]
    objective = config.build_objective()
    table = compare_tuners(
        config.space, objective, config.compare.budget, config.compare.seeds, config.compare.methods, settings
    )
    (out_dir / COMPARISON_TEXT).write_text(table.to_text())
    (out_dir / COMPARISON_JSON).write_text(table.to_json())
    return table


def format_trajectory(records: Sequence[dict[str, Any]]) -> str:
    """Human-readable table of a trajectory log."""
    out = []
    for rec in records:
        kind = rec.get("type")
        if kind == "header":
            out.append(
                f"mode={rec['mode']} strategy={rec['strategy']} min_contribution={rec['min_contribution']} "
                f"max_idle={rec['max_idle']} max_iterations={rec['max_iterations']}"
            )
        elif kind == "pass":
            out.append(f"-- pass {rec['pass']}  q_ex={rec['q_ex']:.4f}  q_initial={rec['q_initial']:.4f}")
            out.append(f"{'iter':>5} {'idx':>4} {'acc':>4} {'q_best':>8} {'idle':>5}  hp_before")
        elif kind == "iteration":
            hp = ", ".join(f"{v:.4g}" for v in rec["hp_before"])
            out.append(
                f"{rec['iteration']:>5} {rec['chosen']:>4} {'yes' if rec['accepted'] else 'no':>4} "
                f"{rec['q_best']:>8.4f} {rec['idle']:>5}  [{hp}]"
            )
        elif kind == "pass_end":
            hp = ", ".join(f"{v:.6g}" for v in rec["hp_best"])
            tail = f" stagnation={rec['stagnation']}" if "stagnation" in rec else ""
            out.append(f"   end: {rec['termination']} q_best={rec['q_best']:.4f} hp_best=[{hp}]{tail}")
    return "\n".join(out) + "\n"
