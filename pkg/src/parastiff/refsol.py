"""Reference solutions and the discrete L2 error measure."""

from __future__ import annotations

import numpy as np

from .errors import AliasingError
from .quadrature import QuadratureRule, norm


def transport_reference(par, theta0, t, points) -> np.ndarray:
    """Exact transport solution: the initial network evaluated at x + t.

    The parametrization is 2pi-periodic by construction, so no wrapping of
    the shifted points is needed.
    """
    points = np.asarray(points, dtype=float)
    return par.eval(theta0, points + t, 0).values


def heat_reference(rule: QuadratureRule, u0_samples, t, k_max: int, points) -> np.ndarray:
    """Heat propagator via Fourier projection and exact time integration.

    Projects the initial samples (given on `rule`) onto modes up to k_max,
    scales mode k by exp(-k^2 t), evaluates at `points`.
    """
    if 4 * k_max > rule.node_count:
        raise AliasingError(
            f"k_max = {k_max} needs at least {4 * k_max} quadrature nodes, "
            f"rule has {rule.node_count}"
        )
    u0 = np.asarray(u0_samples, dtype=float)
    x = rule.nodes
    w = rule.weights
    points = np.asarray(points, dtype=float)
    out = np.full(points.shape, np.sum(w * u0) / (2.0 * np.pi))
    for k in range(1, k_max + 1):
        decay = np.exp(-float(k * k) * t)
        ak = np.sum(w * np.cos(k * x) * u0) / np.pi
        bk = np.sum(w * np.sin(k * x) * u0) / np.pi
        out += decay * (ak * np.cos(k * points) + bk * np.sin(k * points))
    return out


def l2_error(rule: QuadratureRule, u, ref) -> float:
    """Discrete L2 norm of u - ref on the rule's nodes."""
    return norm(rule, np.asarray(u) - np.asarray(ref))
