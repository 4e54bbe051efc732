"""Command line front end for the experiment harness.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 IO error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import selftest as selftest_mod
from .experiments import (
    ConfigError,
    ExperimentConfig,
    algorithm_comparison,
    approximation_study,
    emit_csv,
    emit_table,
    load_config,
    mse_region_sweep,
    run_sweep,
)
from .numerics import NumericalFailure, SolverSettings

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isacopt",
        description="MSE-based training and transmission optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_out=True):
        p.add_argument("--config", help="experiment config file (sectioned key-value)")
        if needs_out:
            p.add_argument("--out", required=True, help="output CSV path")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--trials", type=int, help="Monte Carlo trials override")
        p.add_argument("--threads", type=int, help="worker threads for trials")
        p.add_argument("--overwrite", action="store_true", help="allow replacing the output file")
        p.add_argument(
            "--timing",
            action="store_true",
            help="record measured wall-clock in the CSV (breaks byte-level reproducibility)",
        )

    common(sub.add_parser("run", help="full sweep over the configured SNR grids"))
    common(sub.add_parser("region", help="trade-off region sweep over the weight grid"))
    common(sub.add_parser("approx", help="exact-vs-approximate sensing MSE study"))
    common(sub.add_parser("compare-alg", help="joint-solver convergence comparison"))
    st = sub.add_parser("selftest", help="run the built-in invariant suite")
    st.add_argument("--seed", type=int, default=0)
    return parser


def _load(args) -> ExperimentConfig:
    exp = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        exp.master_seed = args.seed
    if args.trials is not None:
        exp.trials = args.trials
    if args.threads is not None:
        exp.threads = args.threads
    if args.timing:
        exp.timing = True
    return exp


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return EXIT_OK if selftest_mod.run(args.seed) else EXIT_SOLVER
        exp = _load(args)
        if args.command == "run":
            emit_csv(run_sweep(exp), args.out, overwrite=args.overwrite)
        elif args.command == "region":
            emit_csv(mse_region_sweep(exp), args.out, overwrite=args.overwrite)
        elif args.command == "approx":
            rows = approximation_study(exp)
            emit_table(
                rows,
                ["l_dt", "mse_rad_exact", "mse_rad_approx", "rel_gap"],
                args.out,
                overwrite=args.overwrite,
            )
        elif args.command == "compare-alg":
            rows = algorithm_comparison(exp)
            emit_table(
                rows,
                ["algorithm", "iteration", "seconds", "objective"],
                args.out,
                overwrite=args.overwrite,
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
