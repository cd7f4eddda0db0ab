"""Render every recognizable figure from a directory of experiment artifacts."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .families import (
    plot_convergence,
    plot_defects,
    plot_eps_sweep,
    plot_initial_fit,
    plot_longtime,
    plot_weights,
)
from .io import classify

_BY_KIND = {
    "fit": plot_initial_fit,
    "convergence": plot_convergence,
    "defects": plot_defects,
    "eps_sweep": plot_eps_sweep,
    "longtime": plot_longtime,
}


def plot_all(csv_dir, out_dir):
    """Render one image per recognized artifact in csv_dir; returns the paths.

    CSVs are classified by their header (fit reports and guard statistics
    have no figure family of their own and are skipped); checkpoint files
    yield weight-magnitude plots.
    """
    csv_dir, out_dir = Path(csv_dir), Path(out_dir)
    produced = []
    for path in sorted(csv_dir.glob("*.csv")):
        kind = classify(path)
        if kind in _BY_KIND:
            out = out_dir / f"{path.stem}.png"
            produced.append(_BY_KIND[kind](path, out)["path"])
    for path in sorted(csv_dir.glob("*.ckpt")):
        produced.append(plot_weights(path, out_dir / f"{path.stem}_weights.png")["path"])
    return produced


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figplots",
                                     description="Render figures from experiment CSVs.")
    parser.add_argument("csv_dir", help="directory with experiment CSVs (and checkpoints)")
    parser.add_argument("out_dir", help="directory for the rendered images")
    args = parser.parse_args(argv)
    try:
        produced = plot_all(args.csv_dir, args.out_dir)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in produced:
        print(p)
    if not produced:
        print("no recognizable artifacts found", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
