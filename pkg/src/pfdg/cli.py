"""Command-line entry point: ``pfdg [--config FILE] [flags]``.

Settings come from built-in defaults, then a JSON config file, then flags
(flags win).  The exit code is 0 iff every tagged acceptance row passes.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import PROBLEMS, ExperimentConfig, ExperimentError, emit_outputs, run_study

log = logging.getLogger("pfdg")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pfdg", description="Run DG convergence, boundary and pattern studies.")
    p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--k", type=int, nargs="+", help="polynomial degrees")
    p.add_argument("--n-list", help="comma-separated cell counts, e.g. 10,20,40")
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float, help="final time")
    p.add_argument("--theta", type=float)
    p.add_argument("--beta0", help="comma-separated beta0 values (sweep)")
    p.add_argument("--beta1", help="comma-separated beta1 values (sweep)")
    p.add_argument("--norm", choices=("fine", "gauss"))
    p.add_argument("--solver", choices=("direct", "minres", "schur"))
    p.add_argument("--out", help="output directory")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ExperimentError(f"cannot read config {args.config}: {err}") from err
        if not isinstance(data, dict):
            raise ExperimentError(f"config {args.config} must hold a JSON object")
    flags = {
        "problem": args.problem, "k": args.k, "n_list": args.n_list, "dt": args.dt, "T": args.T,
        "theta": args.theta, "beta0": args.beta0, "beta1": args.beta1, "norm": args.norm,
        "solver": args.solver, "out": args.out,
    }
    data.update({key: val for key, val in flags.items() if val is not None})
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as err:
        raise ExperimentError(f"invalid configuration: {err}") from err


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args)
        res = run_study(cfg, progress=log.info, snapshot_dir=cfg.out)
        files = emit_outputs(res, cfg.out)
    except ExperimentError as err:
        log.error("error: %s", err)
        return 2
    for tag in res.tags:
        log.info("%s %s N=%s %s=%.6g target %.6g (%s)", "PASS" if tag.passed else "FAIL", tag.table, tag.N,
                 tag.quantity, tag.value, tag.target, tag.tolerance)
    log.info("wrote %d files to %s", len(files), cfg.out)
    return 0 if res.passed else 1


if __name__ == "__main__":
    sys.exit(main())
