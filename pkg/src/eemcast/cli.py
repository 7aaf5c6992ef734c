"""Command line harness: `fig2` (convergence traces), `fig3` (EE sweep),
`validate` (dry-run config echo).

Exit codes: 0 success, 1 configuration error, 2 solver failure rate above
the configured threshold (results are still written in that case).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .experiments import (
    ConfigError,
    emit_plotdata,
    load_config,
    render_config,
    run_convergence_experiment,
    run_ee_sweep,
)


def _add_run_args(p):
    p.add_argument("--config", required=True, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=None,
                   help="master seed override (64-bit)")
    p.add_argument("--out", required=True, help="output directory for the CSVs")
    p.add_argument("--workers", type=int, default=1,
                   help="drop-level worker processes (results are identical "
                        "for any worker count)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="eemcast",
        description="Monte Carlo experiments for energy-efficient multicast "
                    "beamforming in distributed antenna systems")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_args(sub.add_parser("fig2", help="convergence-trace campaign"))
    _add_run_args(sub.add_parser("fig3", help="EE-vs-power-grid campaign"))
    sub.add_parser("validate", help="parse a config and echo the resolved values") \
       .add_argument("--config", required=True)
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(render_config(cfg))
        return 0

    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            print("config error: --seed must fit in 64 bits", file=sys.stderr)
            return 1
        cfg = replace(cfg, master_seed=args.seed)

    runner = run_convergence_experiment if args.command == "fig2" else run_ee_sweep
    try:
        dataset = runner(cfg, workers=max(1, args.workers))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    paths = emit_plotdata(dataset, args.out)
    for p in paths:
        print(f"wrote {p}")
    rate = dataset.n_failures / dataset.n_cells if dataset.n_cells else 0.0
    print(f"cells: {dataset.n_cells}  solver failures: {dataset.n_failures} "
          f"({100.0 * rate:.2f}%)")
    if rate > cfg.fail_threshold:
        print("solver failure rate above threshold", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
