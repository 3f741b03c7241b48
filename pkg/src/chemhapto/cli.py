"""Command-line entry points: ``chemhapto run|verify|sweep|mms``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import mms
from .config import ConfigError, RunConfig, default_config_path, load_config
from .runner import OutputCollision, claim_output_dir, run_to_directory
from .verify import format_table, run_checks

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

SWEEP_COLUMNS = ("param", "value", "status", "final_u_sup", "max_u_sup", "all_bounded", "out_dir")

log = logging.getLogger("chemhapto")


def _load(path: str) -> RunConfig:
    return load_config(default_config_path() if path == "default" else path)


def cmd_run(config_path: str) -> int:
    try:
        config = _load(config_path)
        summary = run_to_directory(config)
    except (ConfigError, OutputCollision) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if summary.status != "ok":
        print(f"run failed: {summary.message}", file=sys.stderr)
        return EXIT_FAILED
    print(f"wrote {summary.out_dir} ({len(summary.records)} ledger rows, all verdicts bounded: {summary.all_bounded})")
    return EXIT_OK


def cmd_verify(break_stencil: bool = False) -> int:
    checks = run_checks(break_stencil=break_stencil)
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def cmd_mms() -> int:
    results = mms.run_all()
    for res in results:
        errs = ", ".join(f"{e:.6e}" for e in res.errors)
        orders = ", ".join(f"{o:.4f}" for o in res.orders)
        print(f"{res.name:<10} n={list(res.resolutions)} Linf errors [{errs}] orders [{orders}] "
              f"(need >= {res.threshold}) {'PASS' if res.passed else 'FAIL'}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAILED


def _sweep_key(param: str) -> str:
    return param if "." in param or param == "jobs" else f"params.{param}"


def _sweep_one(config: RunConfig, out_dir: Path) -> dict:
    try:
        s = run_to_directory(config, out_dir)
    except Exception as exc:
        return {"status": "failed", "final_u_sup": "nan", "max_u_sup": "nan", "all_bounded": "", "message": str(exc)}
    return {
        "status": s.status,
        "final_u_sup": repr(float(s.final_u_sup)),
        "max_u_sup": repr(float(s.max_u_sup)),
        "all_bounded": "" if s.all_bounded is None else str(s.all_bounded).lower(),
        "message": s.message,
    }


def cmd_sweep(config_path: str, param: str, values: list[str]) -> int:
    try:
        base = _load(config_path)
        key = _sweep_key(param)
        configs = [base.with_value(key, v) for v in values]
        root = claim_output_dir(base.resolved_output_dir())
    except (ConfigError, OutputCollision) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    names = [f"{param}={v}" for v in values]
    if len(set(names)) != len(names):
        print("error: duplicate sweep values", file=sys.stderr)
        return EXIT_USAGE
    dirs = [root / name for name in names]
    if base.jobs > 1:
        with ProcessPoolExecutor(max_workers=base.jobs) as pool:
            results = list(pool.map(_sweep_one, configs, dirs))
    else:
        results = [_sweep_one(c, d) for c, d in zip(configs, dirs)]
    with open(root / "sweep_summary.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for value, d, res in zip(values, dirs, results):
            writer.writerow([param, value, res["status"], res["final_u_sup"], res["max_u_sup"],
                             res["all_bounded"], d.name])
    n_failed = sum(r["status"] != "ok" for r in results)
    for value, res in zip(values, results):
        if res["status"] != "ok":
            print(f"{param}={value} failed: {res['message']}", file=sys.stderr)
    print(f"sweep of {param} over {len(values)} values written to {root} ({n_failed} failed)")
    return EXIT_OK if n_failed == 0 else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemhapto", description="Chemotaxis-haptotaxis simulator and estimate checker.")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("config", help="config file, or 'default' for the bundled default scenario")
    p_verify = sub.add_parser("verify", help="run the self-verification suite")
    p_verify.add_argument("--break-stencil", action="store_true", help=argparse.SUPPRESS)
    p_sweep = sub.add_parser("sweep", help="run one simulation per parameter value")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--param", required=True, help="parameter name (chi, xi, mu) or dotted config key")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    sub.add_parser("mms", help="manufactured-solution convergence study")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "verify":
        return cmd_verify(break_stencil=args.break_stencil)
    if args.command == "sweep":
        values = [v.strip() for v in args.values.split(",") if v.strip()]
        if not values:
            print("error: --values is empty", file=sys.stderr)
            return EXIT_USAGE
        return cmd_sweep(args.config, args.param, values)
    return cmd_mms()


if __name__ == "__main__":
    sys.exit(main())
