"""Command-line harness.

Subcommands: fit | convergence | defects | eps-sweep | longtime.
Exit codes: 0 on success, 2 when a run is flagged as non-convergent,
1 on error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import (
    load_config,
    run_convergence,
    run_defects,
    run_eps_sweep,
    run_fit,
    run_longtime,
)

_COMMANDS = {
    "fit": run_fit,
    "convergence": run_convergence,
    "defects": run_defects,
    "eps-sweep": run_eps_sweep,
    "longtime": run_longtime,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parastiff",
        description="Regularized parametric implicit time integration experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", required=True, help="flat key=value config file")
        sp.add_argument("--out", default="out", help="output directory for CSV files")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="parallel workers for independent grid points")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, threads=args.threads)
        if cfg.experiment and cfg.experiment != args.command:
            print(f"error: config is for experiment {cfg.experiment!r}, "
                  f"but the {args.command!r} subcommand was invoked", file=sys.stderr)
            return 1
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths, flagged, _ = _COMMANDS[args.command](cfg, out_dir)
    except Exception as exc:  # CLI boundary: report and signal failure
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    if flagged:
        print("flagged: non-convergent run", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
