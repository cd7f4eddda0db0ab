"""Readers for the experiment CSV artifacts and network checkpoints.

These are the documented external formats of the integrator package; the
schemas are validated here and a missing column is reported by name.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SCHEMAS = {
    "fit": ["x", "u0", "y0", "error"],
    "fit_report": ["iteration", "misfit"],
    "convergence": ["h", "l2_error", "mean_iterations", "mean_eps", "mean_final_delta"],
    "guard": ["h", "guard_max", "guard_mean", "guard_violations", "n_steps"],
    "defects": ["step_index", "iteration", "delta", "eps"],
    "eps_sweep": ["eps", "delta"],
    "longtime": ["t", "l2_error", "theta_drift", "delta", "eps"],
}

CHECKPOINT_MAGIC = "parastiff-checkpoint-v1"


class SchemaError(ValueError):
    """A CSV does not conform to its documented schema."""


def read_csv(path, kind: str) -> dict[str, np.ndarray]:
    """Read a CSV of the given kind into column arrays, validating columns."""
    expected = SCHEMAS[kind]
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in expected:
            if col not in header:
                raise SchemaError(f"{path}: missing column {col!r} for a {kind} file")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {col: np.array([float(r[col]) for r in rows]) for col in expected}


def classify(path) -> str | None:
    """Schema kind of a CSV based on its header, or None if unrecognized."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().split(",")
    for kind, cols in SCHEMAS.items():
        if header == cols:
            return kind
    return None


def read_checkpoint_weights(path) -> np.ndarray:
    """Flat parameter vector from a checkpoint file (weight-magnitude plots)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise SchemaError(f"{path}: not a {CHECKPOINT_MAGIC} file")
    try:
        start = lines.index("theta") + 1
    except ValueError:
        raise SchemaError(f"{path}: missing theta section") from None
    values = [float(v) for v in lines[start:] if v]
    if not values:
        raise SchemaError(f"{path}: empty parameter list")
    return np.array(values)
