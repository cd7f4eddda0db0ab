"""Composite Gauss-Legendre quadrature and the discrete L2 inner product.

All residual norms and normal-equation assemblies in this package are taken
with respect to the inner product defined by one of these rules, so the rule
object is passed around as the discrete substitute for L2(a, b).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

_NEWTON_TOL = 1e-15
_MAX_NODES_PER = 10


def gauss_legendre_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Computed at call time by Newton iteration on the Legendre polynomial
    P_n, no tabulated coefficients. Supported for 1 <= n <= 10.
    """
    if not 1 <= n <= _MAX_NODES_PER:
        raise ConfigurationError(f"nodes per subinterval must be in 1..{_MAX_NODES_PER}, got {n}")
    if n == 1:
        return np.zeros(1), np.full(1, 2.0)
    k = np.arange(1, n + 1, dtype=float)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    x = 0.5 * (x - x[::-1])  # enforce the exact +/- symmetry of the roots
    _, dp = _legendre(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    return x[::-1].copy(), w[::-1].copy()


def _legendre(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative of P_n by the three-term recurrence."""
    pm, p = np.ones_like(x), x.copy()
    for k in range(1, n):
        pm, p = p, ((2 * k + 1) * x * p - k * pm) / (k + 1)
    dp = n * (x * p - pm) / (x * x - 1.0)
    return p, dp


@dataclass(frozen=True)
class QuadratureRule:
    """Composite quadrature rule on [a, b].

    nodes are strictly increasing, weights strictly positive with
    sum(weights) = b - a.
    """

    nodes: np.ndarray
    weights: np.ndarray
    a: float
    b: float
    subinterval_count: int
    nodes_per_subinterval: int

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def node_count(self) -> int:
        return self.nodes.size

    def inner_product(self, f, g):
        return inner_product(self, f, g)

    def norm(self, f) -> float:
        return norm(self, f)


def build_composite_gauss(a: float, b: float, subintervals: int, nodes_per: int) -> QuadratureRule:
    """Composite Gauss-Legendre rule: `subintervals` equal cells, `nodes_per` nodes each.

    Exact for polynomials of degree <= 2*nodes_per - 1 on each cell.
    """
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise ConfigurationError(f"invalid interval [{a}, {b}]")
    if subintervals < 1:
        raise ConfigurationError(f"subinterval count must be positive, got {subintervals}")
    xi, wi = gauss_legendre_nodes(nodes_per)
    edges = np.linspace(a, b, subintervals + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return QuadratureRule(nodes, weights, float(a), float(b), subintervals, nodes_per)


def inner_product(rule: QuadratureRule, f, g):
    """Discrete L2 pairing sum_m w_m conj(f_m) g_m.

    The first argument is conjugated so complex samples (Runge-Kutta stage
    solves) get the Hermitian inner product; real input returns a real value.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != (rule.node_count,) or g.shape != (rule.node_count,):
        raise ShapeError(
            f"sample shapes {f.shape}, {g.shape} do not match node count {rule.node_count}"
        )
    val = np.sum(rule.weights * np.conj(f) * g)
    if not (np.iscomplexobj(f) or np.iscomplexobj(g)):
        return float(val.real)
    return val


def norm(rule: QuadratureRule, f) -> float:
    """Discrete L2 norm sqrt(<f, f>)."""
    f = np.asarray(f)
    if f.shape != (rule.node_count,):
        raise ShapeError(f"sample shape {f.shape} does not match node count {rule.node_count}")
    return float(np.sqrt(np.sum(rule.weights * np.abs(f) ** 2)))
