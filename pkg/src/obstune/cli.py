"""Command line front end.

Exit codes: 0 clean termination (any termination reason), 1 internal
consistency failure, 2 invalid config, 3 objective failure, 4 not enough
bootstrap data to fit the mappers.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiments import ObjectiveFailure
from .mappers import InsufficientData
from .session import (
    TRAJECTORY_FILE,
    ConsistencyError,
    check_trajectory,
    format_trajectory,
    read_trajectory,
    run_compare,
    run_session,
)

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_OBJECTIVE = 3
EXIT_DATA = 4


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="session config (TOML)")
    common.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    common.add_argument("--seed", type=int, help="override the session seed")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")

    p = argparse.ArgumentParser(prog="obstune", description="Observer-assisted hyper-parameter tuning.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="bootstrap, fit, tune and verify one session")
    sub.add_parser("compare", parents=[common], help="equal-budget comparison against baselines")
    sub.add_parser("validate", parents=[common], help="check a config without running anything")
    insp = sub.add_parser("inspect", parents=[common], help="pretty-print a trajectory log")
    insp.add_argument("path", nargs="?", type=Path, help="trajectory.log or a session directory")
    return p


def _load(args: argparse.Namespace):
    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be >= 0", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)
    try:
        return load_config(args.config, {"seed": args.seed, "out": args.out})
    except ConfigError as exc:
        print(f"{args.config}: invalid config", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG) from None


def _out_dir(args: argparse.Namespace, config) -> Path:
    if config.out_dir is not None:
        return config.out_dir
    return args.config.parent / "out"


def cmd_validate(args: argparse.Namespace) -> int:
    _load(args)
    if not args.quiet:
        print("valid")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    try:
        outcome = run_session(config, out)
    except ObjectiveFailure as exc:
        print(f"objective failure: {exc}", file=sys.stderr)
        return EXIT_OBJECTIVE
    except InsufficientData as exc:
        print(f"insufficient bootstrap data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConsistencyError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if not args.quiet:
        r = outcome.report
        print(f"termination:      {r['result']['termination']}")
        print(f"surrogate q_best: {r['surrogate_q_best']:.6f}")
        print(f"verified quality: {r['verified_quality']:.6f}")
        print(f"hp_best:          {dict(zip(config.space.names, r['result']['hp_best']))}")
        print(f"evaluations:      {r['evaluation_budget']}")
        print(f"artifacts:        {out}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    try:
        table = run_compare(config, out)
    except ObjectiveFailure as exc:
        print(f"objective failure: {exc}", file=sys.stderr)
        return EXIT_OBJECTIVE
    except InsufficientData as exc:
        print(f"insufficient bootstrap data: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not args.quiet:
        sys.stdout.write(table.to_text())
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    path = args.path or args.out
    if path is None:
        print("error: give a trajectory log path or --out DIR", file=sys.stderr)
        return EXIT_CONFIG
    if path.is_dir():
        path = path / TRAJECTORY_FILE
    try:
        records = read_trajectory(path)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(format_trajectory(records))
    problems = check_trajectory(records)
    for p in problems:
        print(f"inconsistent: {p}", file=sys.stderr)
    return EXIT_INTERNAL if problems else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    handler = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate, "inspect": cmd_inspect}[args.command]
    return handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
