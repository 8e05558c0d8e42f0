"""Session configuration: TOML parsing and validation.

Validation collects every violation instead of stopping at the first one, and
each message starts with the dotted path of the offending field. The schema
is documented in ``docs/config.md``.
"""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .costs import cost_from_dict
from .multipass import ConstantStep, DecayingStep, MultiPassConfig
from .objectives import objective_from_dict
from .observer import BasicTunerConfig, SelectionStrategy
from .space import HyperParamSpace, ParamSpec

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema_version", "seed", "space", "objective", "bootstrap", "mapper", "tuner", "multi_pass", "compare", "output"}
_PARAM_KEYS = {"name", "kind", "lower", "upper", "cost"}
_OBJECTIVE_KEYS = {"kind", "center", "width", "bumps", "threshold", "low", "high", "noise_sd", "seed", "serial"}
_BOOTSTRAP_KEYS = {"count", "seed", "workers"}
_MAPPER_KEYS = {"kind", "k"}
_TUNER_KEYS = {"mode", "strategy", "q_ex", "max_iterations", "max_idle", "min_contribution"}
_MULTI_KEYS = {"q_target", "q_init", "step", "max_stagnation", "warm_start"}
_STEP_KEYS = {"kind", "step", "initial", "factor"}
_COMPARE_KEYS = {"budget", "seeds", "methods"}
_OUTPUT_KEYS = {"dir"}


class ConfigError(ValueError):
    def __init__(self, violations: list[str]) -> None:
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass(frozen=True)
class CompareSettings:
    budget: int = 512
    seeds: tuple[int, ...] = tuple(range(5))
    methods: tuple[str, ...] = ("observer", "random_search", "grid_search")


@dataclass(frozen=True)
class SessionConfig:
    seed: int
    space: HyperParamSpace
    objective: dict[str, Any]
    bootstrap_count: int
    bootstrap_seed: int
    workers: int
    mapper_kind: str
    k: int
    mode: str
    tuner: BasicTunerConfig
    multi_pass: MultiPassConfig | None
    compare: CompareSettings
    out_dir: Path | None
    digest: str = ""
    overrides: dict[str, Any] = field(default_factory=dict)

    def build_objective(self):
        return objective_from_dict(self.space, self.objective, default_seed=self.seed)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


class _Checker:
    def __init__(self) -> None:
        self.errors: list[str] = []

    def err(self, path: str, msg: str) -> None:
        self.errors.append(f"{path}: {msg}")

    def table(self, raw: dict, key: str, allowed: set[str], required: bool = False) -> dict:
        val = raw.get(key)
        if val is None:
            if required:
                self.err(key, "missing required table")
            return {}
        if not isinstance(val, dict):
            self.err(key, "must be a table")
            return {}
        self.unknown(val, allowed, key)
        return val

    def unknown(self, tbl: dict, allowed: set[str], prefix: str) -> None:
        for k in sorted(set(tbl) - allowed):
            self.err(f"{prefix}.{k}" if prefix else k, "unknown key")

    def int_(self, tbl: dict, key: str, path: str, default: Any = None, minimum: int | None = None, required: bool = False) -> Any:
        if key not in tbl:
            if required:
                self.err(path, "missing required field")
            return default
        v = tbl[key]
        if not _is_int(v):
            self.err(path, f"must be an integer, got {v!r}")
            return default
        if minimum is not None and v < minimum:
            self.err(path, f"must be >= {minimum}, got {v}")
            return default
        return v

    def num(self, tbl: dict, key: str, path: str, default: Any = None, unit: bool = False, required: bool = False) -> Any:
        if key not in tbl:
            if required:
                self.err(path, "missing required field")
            return default
        v = tbl[key]
        if not _is_num(v):
            self.err(path, f"must be a number, got {v!r}")
            return default
        if unit and not 0.0 <= v <= 1.0:
            self.err(path, f"must lie in [0, 1], got {v}")
            return default
        return float(v)

    def choice(self, tbl: dict, key: str, path: str, options: tuple[str, ...], default: str) -> str:
        v = tbl.get(key, default)
        if v not in options:
            self.err(path, f"must be one of {', '.join(options)}, got {v!r}")
            return default
        return v


def _parse_space(ck: _Checker, raw: dict, strategy: str) -> HyperParamSpace | None:
    space_tbl = ck.table(raw, "space", {"params"}, required=True)
    params_raw = space_tbl.get("params")
    if not params_raw:
        if space_tbl:
            ck.err("space.params", "must list at least one parameter")
        elif "space" in raw:
            ck.err("space.params", "missing required field")
        return None
    if not isinstance(params_raw, list):
        ck.err("space.params", "must be an array of tables")
        return None
    specs = []
    ok = True
    for i, p in enumerate(params_raw):
        path = f"space.params[{i}]"
        if not isinstance(p, dict):
            ck.err(path, "must be a table")
            ok = False
            continue
        ck.unknown(p, _PARAM_KEYS, path)
        name = p.get("name")
        kind = p.get("kind", "continuous")
        lower = ck.num(p, "lower", f"{path}.lower", required=True)
        upper = ck.num(p, "upper", f"{path}.upper", required=True)
        if not isinstance(name, str) or not name:
            ck.err(f"{path}.name", "missing or empty")
            ok = False
            continue
        if lower is None or upper is None:
            ok = False
            continue
        cost = None
        if "cost" in p:
            if strategy != "cost_based":
                ck.err(f"{path}.cost", "cost functions are only allowed with tuner.strategy = 'cost_based'")
            elif not isinstance(p["cost"], dict):
                ck.err(f"{path}.cost", "must be a table")
            else:
                ck.unknown(p["cost"], {"kind", "points"}, f"{path}.cost")
                try:
                    cost = cost_from_dict(p["cost"], lower, upper)
                except (ValueError, TypeError) as exc:
                    ck.err(f"{path}.cost", str(exc))
        elif strategy == "cost_based":
            ck.err(f"{path}.cost", "required when tuner.strategy = 'cost_based'")
        try:
            specs.append(ParamSpec(name, kind, lower, upper, cost))
        except ValueError as exc:
            ck.err(path, str(exc))
            ok = False
    if not ok or not specs:
        return None
    try:
        return HyperParamSpace(specs)
    except ValueError as exc:
        ck.err("space.params", str(exc))
        return None


def parse_config(raw: dict[str, Any], digest: str = "", overrides: dict[str, Any] | None = None) -> SessionConfig:
    """Validate a decoded config document and build a :class:`SessionConfig`.

    Raises:
        ConfigError: with the full list of violations.
    """
    overrides = dict(overrides or {})
    ck = _Checker()
    ck.unknown(raw, _TOP_KEYS, "")

    version = raw.get("schema_version")
    if version is None:
        ck.err("schema_version", "missing required field")
    elif version != SCHEMA_VERSION:
        ck.err("schema_version", f"unsupported version {version!r} (expected {SCHEMA_VERSION})")

    seed = ck.int_(raw, "seed", "seed", default=0, minimum=0)
    if overrides.get("seed") is not None:
        seed = overrides["seed"]

    tuner_tbl = ck.table(raw, "tuner", _TUNER_KEYS)
    mode = ck.choice(tuner_tbl, "mode", "tuner.mode", ("single_pass", "multi_pass"), "single_pass")
    strategy = ck.choice(tuner_tbl, "strategy", "tuner.strategy", ("basic", "cost_based"), "basic")

    space = _parse_space(ck, raw, strategy)
    n = len(space) if space is not None else 1

    obj_tbl = ck.table(raw, "objective", _OBJECTIVE_KEYS, required=True)
    if obj_tbl:
        if "kind" not in obj_tbl:
            ck.err("objective.kind", "missing required field")
        elif space is not None:
            try:
                objective_from_dict(space, obj_tbl, default_seed=seed)
            except (ValueError, TypeError, KeyError) as exc:
                ck.err(f"objective ({obj_tbl.get('kind')})", str(exc))
        if "serial" in obj_tbl and not isinstance(obj_tbl["serial"], bool):
            ck.err("objective.serial", "must be a boolean")

    boot = ck.table(raw, "bootstrap", _BOOTSTRAP_KEYS)
    count = ck.int_(boot, "count", "bootstrap.count", default=50 * n, minimum=1)
    boot_seed = ck.int_(boot, "seed", "bootstrap.seed", default=seed, minimum=0)
    if overrides.get("seed") is not None:
        boot_seed = seed
    workers = ck.int_(boot, "workers", "bootstrap.workers", default=1, minimum=1)

    mapper = ck.table(raw, "mapper", _MAPPER_KEYS)
    mapper_kind = ck.choice(mapper, "kind", "mapper.kind", ("knn", "linear"), "knn")
    k = ck.int_(mapper, "k", "mapper.k", default=5, minimum=1)

    q_ex = ck.num(tuner_tbl, "q_ex", "tuner.q_ex", default=1.0, unit=True)
    max_iterations = ck.int_(tuner_tbl, "max_iterations", "tuner.max_iterations", default=200, minimum=1)
    max_idle = ck.int_(tuner_tbl, "max_idle", "tuner.max_idle", default=20, minimum=1)
    min_contribution = ck.num(tuner_tbl, "min_contribution", "tuner.min_contribution", default=0.001, unit=True)

    multi_tbl = ck.table(raw, "multi_pass", _MULTI_KEYS, required=(mode == "multi_pass"))
    if mode != "multi_pass" and "multi_pass" in raw:
        ck.err("multi_pass", "only allowed with tuner.mode = 'multi_pass'")
    step = None
    if mode == "multi_pass":
        q_target = ck.num(multi_tbl, "q_target", "multi_pass.q_target", unit=True, required=True)
        q_init = ck.num(multi_tbl, "q_init", "multi_pass.q_init", default=0.6, unit=True)
        max_stag = ck.int_(multi_tbl, "max_stagnation", "multi_pass.max_stagnation", default=3, minimum=1)
        warm = multi_tbl.get("warm_start", True)
        if not isinstance(warm, bool):
            ck.err("multi_pass.warm_start", "must be a boolean")
            warm = True
        step_tbl = multi_tbl.get("step", {"kind": "constant", "step": 0.05})
        if not isinstance(step_tbl, dict):
            ck.err("multi_pass.step", "must be a table")
        else:
            ck.unknown(step_tbl, _STEP_KEYS, "multi_pass.step")
            skind = ck.choice(step_tbl, "kind", "multi_pass.step.kind", ("constant", "decaying"), "constant")
            try:
                if skind == "constant":
                    step = ConstantStep(ck.num(step_tbl, "step", "multi_pass.step.step", default=0.05))
                else:
                    step = DecayingStep(
                        ck.num(step_tbl, "initial", "multi_pass.step.initial", default=0.1),
                        ck.num(step_tbl, "factor", "multi_pass.step.factor", default=0.5),
                    )
            except (ValueError, TypeError) as exc:
                ck.err("multi_pass.step", str(exc))
        if q_target is not None and q_init is not None and q_init > q_target:
            ck.err("multi_pass.q_init", f"must not exceed q_target ({q_init} > {q_target})")

    cmp_tbl = ck.table(raw, "compare", _COMPARE_KEYS)
    budget = ck.int_(cmp_tbl, "budget", "compare.budget", default=512, minimum=2)
    seeds = cmp_tbl.get("seeds", list(range(5)))
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        ck.err("compare.seeds", "must be a non-empty array of non-negative integers")
        seeds = [0]
    methods = cmp_tbl.get("methods", ["observer", "random_search", "grid_search"])
    valid_methods = {"observer", "random_search", "grid_search"}
    if not isinstance(methods, list) or not methods or not all(m in valid_methods for m in methods):
        ck.err("compare.methods", f"must be a non-empty array drawn from {', '.join(sorted(valid_methods))}")
        methods = ["observer"]

    out_tbl = ck.table(raw, "output", _OUTPUT_KEYS)
    out_dir = out_tbl.get("dir")
    if out_dir is not None and not isinstance(out_dir, str):
        ck.err("output.dir", "must be a string")
        out_dir = None
    if overrides.get("out") is not None:
        out_dir = str(overrides["out"])

    if ck.errors:
        raise ConfigError(ck.errors)

    assert space is not None
    strat = SelectionStrategy.from_space(space) if strategy == "cost_based" else SelectionStrategy.basic()
    tuner = BasicTunerConfig(
        q_ex=q_ex,
        max_iterations=max_iterations,
        max_idle=max_idle,
        min_contribution=min_contribution,
        strategy=strat,
        seed=seed,
    )
    multi = None
    if mode == "multi_pass":
        assert step is not None
        multi = MultiPassConfig(q_target, q_init, step, max_stag, warm, tuner)
    return SessionConfig(
        seed=seed,
        space=space,
        objective=dict(obj_tbl),
        bootstrap_count=count,
        bootstrap_seed=boot_seed,
        workers=workers,
        mapper_kind=mapper_kind,
        k=k,
        mode=mode,
        tuner=tuner,
        multi_pass=multi,
        compare=CompareSettings(budget, tuple(seeds), tuple(methods)),
        out_dir=Path(out_dir) if out_dir else None,
        digest=digest,
        # only overrides that change results are recorded; the output location does not
        overrides={"seed": overrides["seed"]} if overrides.get("seed") is not None else {},
    )


def config_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_config(path: str | Path, overrides: dict[str, Any] | None = None) -> SessionConfig:
    """Read, decode and validate a TOML session config.

    Raises:
        ConfigError: syntax errors (with line and column) or schema violations.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read: {exc.strerror}"]) from exc
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    return parse_config(raw, hashlib.sha256(data).hexdigest(), overrides)
