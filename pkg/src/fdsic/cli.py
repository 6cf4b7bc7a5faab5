"""Command-line interface for the cancellation experiments.

Subcommands mirror the three showcases plus a digital-canceller parameter
sweep and the embedded selftest. Reports go to stdout; ``--out`` additionally
writes the report, PSD tables, and traces as CSV.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import default_config, load_config
from .errors import SimulationError
from .experiments import (
    SweepGrid,
    run_combined_showcase,
    run_dsic_showcase,
    run_rfsic_showcase,
    run_sweep,
    write_outputs,
    write_sweep_csv,
)
from .selftest import run_selftest

_SHOWCASES = {
    "rfsic": run_rfsic_showcase,
    "dsic": run_dsic_showcase,
    "combined": run_combined_showcase,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdsic",
        description="Full-duplex self-interference cancellation simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="experiment config file (flat key = value)")
        p.add_argument("--out", help="directory for report and CSV outputs")
        p.add_argument("--seed", type=int, help="base seed overriding all noise-source seeds")
        p.add_argument("--samples", type=int, help="number of baseband samples to simulate")

    for name, help_text in (
        ("rfsic", "RF canceller showcase: tune the vector modulator, report analog stages"),
        ("dsic", "digital canceller showcase with the RF path disabled"),
        ("combined", "full chain with a received signal of interest"),
    ):
        add_common(sub.add_parser(name, help=help_text))

    sweep = sub.add_parser("sweep", help="digital-canceller parameter grid")
    add_common(sweep)
    sweep.add_argument("--lambdas", help="comma list of forgetting factors")
    sweep.add_argument("--orders", help="comma list of nonlinearity orders")
    sweep.add_argument("--memories", help="comma list of memory depths")
    sweep.add_argument("--updates", help="comma list of solver update budgets")
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    sub.add_parser("selftest", help="run the embedded structural invariant suite")
    return parser


def _load(args) -> "ExperimentConfig":
    if args.config is not None:
        if not os.path.exists(args.config):
            raise SimulationError(f"config file not found: {args.config}")
        cfg = load_config(args.config)
    else:
        cfg = default_config()
    if args.seed is not None:
        cfg = cfg.with_seed_base(args.seed)
    if args.samples is not None:
        cfg = cfg.with_samples(args.samples)
    return cfg


def cli_main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "selftest":
        results = run_selftest(verbose=True)
        failed = [r for r in results if not r.passed]
        print(f"{len(results) - len(failed)}/{len(results)} checks passed")
        return 1 if failed else 0

    try:
        cfg = _load(args)
        if args.command in _SHOWCASES:
            result = _SHOWCASES[args.command](cfg)
            sys.stdout.write(result.report.render())
            if args.out:
                write_outputs(args.out, result, cfg)
                print(f"outputs written to {args.out}")
            return 0
        if args.command == "sweep":
            grid = SweepGrid()
            if args.lambdas:
                grid = SweepGrid(
                    forgetting_factors=tuple(float(v) for v in args.lambdas.split(",")),
                    nonlinearity_orders=grid.nonlinearity_orders,
                    memory_depths=grid.memory_depths,
                    max_updates=grid.max_updates,
                )
            if args.orders:
                grid = SweepGrid(grid.forgetting_factors,
                                 tuple(int(v) for v in args.orders.split(",")),
                                 grid.memory_depths, grid.max_updates)
            if args.memories:
                grid = SweepGrid(grid.forgetting_factors, grid.nonlinearity_orders,
                                 tuple(int(v) for v in args.memories.split(",")),
                                 grid.max_updates)
            if args.updates:
                grid = SweepGrid(grid.forgetting_factors, grid.nonlinearity_orders,
                                 grid.memory_depths,
                                 tuple(int(v) for v in args.updates.split(",")))
            rows = run_sweep(cfg, grid, jobs=args.jobs)
            header = list(rows[0].keys())
            print(",".join(header))
            for row in rows:
                print(",".join(row[k] for k in header))
            if args.out:
                os.makedirs(args.out, exist_ok=True)
                write_sweep_csv(os.path.join(args.out, "sweep.csv"), rows)
                print(f"outputs written to {args.out}")
            return 0
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError(f"unhandled command {args.command}")


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
