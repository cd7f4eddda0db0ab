"""Figure rendering for the parastiff experiment CSV artifacts."""

from .cli import plot_all
from .families import (
    plot_convergence,
    plot_defects,
    plot_eps_sweep,
    plot_initial_fit,
    plot_longtime,
    plot_weights,
)
from .io import SchemaError

__version__ = "0.1.0"
