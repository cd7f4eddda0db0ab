"""Construction of initial parameters with Phi(theta0) close to a target.

Two phases: a rough full-batch Adam fit of the quadrature L2 misfit,
followed by a fictitious-time flow toward the target, integrated with the
regularized parametric explicit RK4 method. The flow has the constant
right-hand side y0 - Phi(theta_start) and reaches y0 exactly at tau = 1 in
the non-parametric setting, so each pass transports the network a full
"distance" toward the target; the pass is repeated with the refreshed
right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .netparam import MlpArchitecture
from .quadrature import QuadratureRule, norm
from .regsolve import RegularizedSolver, RegWeights

_FLOW_WEIGHTS = RegWeights(w1=0.0, w2=1.0)  # plain Tikhonov on the parameter velocity


@dataclass(frozen=True)
class TargetFunction:
    """Initial condition to fit: named closed form or custom callable."""

    kind: str
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))


def gaussian_target() -> TargetFunction:
    return TargetFunction("gaussian", lambda x: np.exp(-4.0 * x * x))


def hat_target(smoothing: float = 0.0) -> TargetFunction:
    """Piecewise-linear hat 1 - |x| on |x| <= 1/2, zero elsewhere.

    With smoothing > 0 the hat is convolved with a Gaussian of that width
    (closed form via erf), which caps the curvature a fitted network has to
    reproduce at the kinks; the shipped low-regularity checkpoint uses this.
    """
    if smoothing <= 0.0:
        def hat(x):
            return np.where(np.abs(x) <= 0.5, 1.0 - np.abs(x), 0.0)

        return TargetFunction("hat", hat)

    from scipy.special import erf

    s = float(smoothing)

    def piece(x, a, b, c, d):
        # integral of (c + d*y) * N(y - x; s^2) over y in [a, b]
        alpha, beta = (a - x) / s, (b - x) / s
        cdf = 0.5 * (erf(beta / np.sqrt(2.0)) - erf(alpha / np.sqrt(2.0)))
        pdf_a = np.exp(-0.5 * alpha**2) / np.sqrt(2.0 * np.pi)
        pdf_b = np.exp(-0.5 * beta**2) / np.sqrt(2.0 * np.pi)
        return (c + d * x) * cdf + d * s * (pdf_a - pdf_b)

    def smooth_hat(x):
        return piece(x, -0.5, 0.0, 1.0, 1.0) + piece(x, 0.0, 0.5, 1.0, -1.0)

    return TargetFunction("hat", smooth_hat)


def custom_target(fn) -> TargetFunction:
    return TargetFunction("custom", fn)


def target_by_name(name: str, smoothing: float = 0.0) -> TargetFunction:
    if name == "gaussian":
        return gaussian_target()
    if name == "hat":
        return hat_target(smoothing)
    raise ConfigurationError(f"unknown target {name!r}")


def init_params(arch: MlpArchitecture, rng: np.random.Generator) -> np.ndarray:
    """Random initialization: uniform weights scaled by 1/sqrt(fan_in),
    zero biases except the input phases, which are spread over [0, 2pi)."""
    theta = np.zeros(arch.param_count)
    theta[:arch.input_width] = rng.uniform(0.0, 2.0 * np.pi, arch.input_width)
    pos = arch.input_width
    for rows, cols in arch.layer_shapes():
        theta[pos:pos + rows * cols] = rng.uniform(-1.0, 1.0, rows * cols) / np.sqrt(cols)
        pos += rows * cols + rows
    theta[pos:pos + arch.hidden_width] = (
        rng.uniform(-1.0, 1.0, arch.hidden_width) / np.sqrt(arch.hidden_width))
    return theta


def misfit(par, theta, target: TargetFunction, rule: QuadratureRule) -> float:
    """Quadrature L2 distance between Phi(theta) and the target."""
    return norm(rule, par.eval(theta, rule.nodes, 0).values - target(rule.nodes))


def adam_prefit(target: TargetFunction, theta_init, par, rule: QuadratureRule,
                iters: int = 5000, lr: float = 1e-2,
                lr_decay: float = 0.5, lr_decay_every: int = 1000,
                beta1: float = 0.9, beta2: float = 0.999, eps_adam: float = 1e-8):
    """Full-batch Adam on the misfit 0.5 ||Phi(theta) - y0||^2.

    Returns (theta, history) where history[k] is the misfit before step k;
    history has one trailing entry for the returned iterate.
    """
    if iters < 1:
        raise ConfigurationError(f"iters must be >= 1, got {iters}")
    theta = np.asarray(theta_init, dtype=float).copy()
    y0 = target(rule.nodes)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    history = []
    rate = lr
    for k in range(iters):
        jet = par.eval(theta, rule.nodes, 0)
        res = jet.values - y0
        loss = norm(rule, res)
        if not np.isfinite(loss):
            raise DivergenceError("non-finite misfit in Adam prefit", last_theta=theta)
        history.append(loss)
        grad = par.jacobian(theta, rule.nodes, 0).J0.T @ (rule.weights * res)
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * grad * grad
        m_hat = m / (1.0 - beta1 ** (k + 1))
        v_hat = v / (1.0 - beta2 ** (k + 1))
        if k > 0 and k % lr_decay_every == 0:
            rate *= lr_decay
        theta -= rate * m_hat / (np.sqrt(v_hat) + eps_adam)
    history.append(misfit(par, theta, target, rule))
    return theta, history


def fictitious_flow_fit(target: TargetFunction, theta_start, par, rule: QuadratureRule,
                        steps: int = 100, eps: float = 1e-4, repeats: int = 2):
    """Drive Phi(theta) toward the target along a constant-velocity flow.

    Each pass integrates d(theta)/dtau over [0, 1] with `steps` classical
    RK4 steps; every stage velocity solves the regularized linear problem
    min ||Phi'(theta) v - (y0 - Phi(theta_pass))||^2 + eps^2 ||v||^2.
    Returns (theta, pass_misfits) with the misfit recorded after each pass.
    """
    if steps < 1 or repeats < 1:
        raise ConfigurationError("steps and repeats must be >= 1")
    theta = np.asarray(theta_start, dtype=float).copy()
    y0 = target(rule.nodes)
    dt = 1.0 / steps

    def velocity(th, rhs):
        solver = RegularizedSolver(rule, par.jacobian(th, rule.nodes, 0).J0)
        return solver.solve(-rhs, np.zeros_like(th), eps, _FLOW_WEIGHTS).x

    pass_misfits = []
    for _ in range(repeats):
        rhs = y0 - par.eval(theta, rule.nodes, 0).values
        for _ in range(steps):
            k1 = velocity(theta, rhs)
            k2 = velocity(theta + 0.5 * dt * k1, rhs)
            k3 = velocity(theta + 0.5 * dt * k2, rhs)
            k4 = velocity(theta + dt * k3, rhs)
            step = (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(step)):
                raise DivergenceError("non-finite flow step", last_theta=theta)
            theta = theta + step
        pass_misfits.append(misfit(par, theta, target, rule))
    return theta, pass_misfits
