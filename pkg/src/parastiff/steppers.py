"""Regularized parametric implicit time integrators.

One step evolves the parameter vector so that the parametrized function
tracks the implicit Euler, implicit midpoint, or an s-stage implicit
Runge-Kutta discretization of du/dt = f(u). Each step solves a nonlinear
least-squares problem approximately with a few regularized Gauss-Newton
iterations; multistage systems are decoupled into independent complex
stage solves by diagonalizing the inverse coefficient matrix.

The module also provides the exact Fourier-Galerkin realization of every
step ("galerkin_step") used as an oracle for the linear parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigurationError,
    DivergenceError,
    NumericError,
    UnsupportedMethodError,
)
from .netparam import JetBatch
from .quadrature import QuadratureRule
from .regsolve import RegularizedSolver, RegWeights
from .semilinear import Problem, apply_A_jacobian, apply_f

# ---------------------------------------------------------------------------
# Tableaux and their spectral data


@dataclass(frozen=True)
class ButcherTableau:
    """Runge-Kutta coefficients (A, b, c)."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    name: str = ""

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        s = b.size
        if A.shape != (s, s) or c.shape != (s,):
            raise ConfigurationError(f"inconsistent tableau shapes {A.shape}, {b.shape}, {c.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def stages(self) -> int:
        return self.b.size

    @property
    def stiffly_accurate(self) -> bool:
        return bool(np.max(np.abs(self.b - self.A[-1, :])) <= 1e-14)


def implicit_euler_tableau() -> ButcherTableau:
    return ButcherTableau(np.array([[1.0]]), np.array([1.0]), np.array([1.0]), "euler")


def midpoint_tableau() -> ButcherTableau:
    """The 1-stage Gauss method (implicit midpoint rule)."""
    return ButcherTableau(np.array([[0.5]]), np.array([1.0]), np.array([0.5]), "midpoint")


def gauss2_tableau() -> ButcherTableau:
    r3 = math.sqrt(3.0)
    A = np.array([[0.25, 0.25 - r3 / 6.0], [0.25 + r3 / 6.0, 0.25]])
    b = np.array([0.5, 0.5])
    c = np.array([0.5 - r3 / 6.0, 0.5 + r3 / 6.0])
    return ButcherTableau(A, b, c, "gauss2")


def radau2_tableau() -> ButcherTableau:
    A = np.array([[5.0 / 12.0, -1.0 / 12.0], [0.75, 0.25]])
    b = np.array([0.75, 0.25])
    c = np.array([1.0 / 3.0, 1.0])
    return ButcherTableau(A, b, c, "radau2")


@dataclass(frozen=True)
class SpectralTableau:
    """Tableau plus the eigendecomposition of inv(A) used for stage decoupling.

    T diag(eigenvalues) T_inv reconstructs inv(A); T is scaled so that its
    spectral norm is 1. grid_weights w solve w^T A = b^T and give the grid
    value y1 = y0 + sum_i w_i (Y_i - y0). mu = max_i 1/Re(lambda_i) bounds
    the inverse of the shifted stage operator over the left half-plane.
    """

    tableau: ButcherTableau
    T: np.ndarray
    T_inv: np.ndarray
    eigenvalues: np.ndarray
    grid_weights: np.ndarray
    mu: float


def build_spectral(tableau: ButcherTableau) -> SpectralTableau:
    """Diagonalize inv(A); reject defective or wrong-half-plane spectra."""
    A = tableau.A
    s = tableau.stages
    try:
        A_inv = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise UnsupportedMethodError(f"coefficient matrix is singular: {exc}") from exc
    lam, V = np.linalg.eig(A_inv)
    order = np.lexsort((-lam.imag, lam.real))
    lam, V = lam[order], V[:, order]
    if np.min(lam.real) <= 0:
        raise UnsupportedMethodError(f"eigenvalues of inv(A) must have positive real part: {lam}")
    T = V / np.linalg.norm(V, 2)
    try:
        T_inv = np.linalg.inv(T)
    except np.linalg.LinAlgError as exc:
        raise UnsupportedMethodError(f"defective coefficient matrix: {exc}") from exc
    recon = T @ np.diag(lam) @ T_inv
    if np.max(np.abs(recon - A_inv)) > 1e-10 * max(1.0, np.max(np.abs(A_inv))):
        raise UnsupportedMethodError("eigendecomposition does not reconstruct inv(A)")
    w = np.linalg.solve(A.T, tableau.b)
    mu = float(np.max(1.0 / lam.real))
    return SpectralTableau(tableau, T, T_inv, lam, w, mu)


def _conjugate_pairs(spec: SpectralTableau):
    """Solve plan [(i, partner|None)]: partner stages are conjugates of i.

    Returns None when the eigenvector columns do not come in exact conjugate
    pairs, in which case all stages must be solved individually.
    """
    lam, T = spec.eigenvalues, spec.T
    s = lam.size
    used, plan = set(), []
    for i in range(s):
        if i in used:
            continue
        used.add(i)
        if abs(lam[i].imag) <= 1e-14:
            plan.append((i, None))
            continue
        partner = None
        for j in range(i + 1, s):
            if j in used:
                continue
            if (abs(lam[j] - np.conj(lam[i])) <= 1e-12 * abs(lam[i])
                    and np.max(np.abs(T[:, j] - np.conj(T[:, i]))) <= 1e-12):
                partner = j
                break
        if partner is None:
            return None
        used.add(partner)
        plan.append((i, partner))
    return plan


# ---------------------------------------------------------------------------
# Step configuration and traces


@dataclass
class StepperConfig:
    """Everything a step needs besides (theta0, h, eps, K, problem)."""

    rule: QuadratureRule
    param: object
    weights: RegWeights = field(default_factory=RegWeights)
    damping: float = 1.0
    refresh_jacobian: bool = False
    guard_constant: float = 10.0
    pair_shortcut: bool = True
    fit_iterations: int = 8
    delta_exit: float = 1e-14
    # how much residual increment activity the eps controller tolerates
    # before it declares an iteration non-settled; low-regularity presets
    # loosen this to live with limit-cycling iterations
    settle_incr_ratio: float = 0.01


@dataclass
class GNTrace:
    """Per-iteration record of one time step."""

    deltas: list[float] = field(default_factory=list)
    stage_deltas: list[list[float]] | None = None
    eps_used: float = 0.0
    theta_increment_norms: list[float] = field(default_factory=list)
    guard_ratios: list[float] = field(default_factory=list)
    fit_deltas: list[float] | None = None

    @property
    def iterations(self) -> int:
        return len(self.deltas)

    @property
    def final_delta(self) -> float:
        return self.deltas[-1] if self.deltas else 0.0

    def guard_violations(self, guard_constant: float) -> int:
        return sum(1 for g in self.guard_ratios if g > guard_constant)

    def settled(self, delta_slack: float = 1.2, incr_ratio: float = 0.01) -> bool:
        """Whether the iteration converged rather than wandered.

        A settled iteration ends at (close to) its smallest recent defect
        and its parameter increments have decayed; a wandering one keeps
        taking large steps, which makes its final defect meaningless. The
        defect is compared against the tail minimum so that an early
        transient dip does not disqualify an otherwise flat plateau.
        """
        if not self.deltas:
            return True
        final = self.deltas[-1]
        if not math.isfinite(final):
            return False
        if max(self.deltas) > 100.0 * self.deltas[0]:
            return False  # blew up mid-iteration, wherever it parked
        tail = self.deltas[-5:]
        if final > delta_slack * min(tail):
            return False
        inc = self.theta_increment_norms
        if len(inc) >= 8:
            # needs enough iterations to judge: a converging iteration has
            # pushed its increments well below their peak by then
            largest = max(inc)
            if largest > 0 and inc[-1] > incr_ratio * largest:
                return False
        return True


@dataclass
class StepResult:
    theta_next: np.ndarray
    trace: GNTrace
    stage_params: list[np.ndarray] | None = None


def _check_step_args(h, eps, K):
    if not (np.isfinite(h) and h > 0):
        raise ConfigurationError(f"step size must be positive, got {h}")
    if not (np.isfinite(eps) and eps > 0):
        raise ConfigurationError(f"eps must be positive, got {eps}")
    if K < 1:
        raise ConfigurationError(f"iteration count must be >= 1, got {K}")


def _average_jets(a: JetBatch, b: JetBatch) -> JetBatch:
    return JetBatch(
        0.5 * (a.values + b.values),
        None if a.d1 is None else 0.5 * (a.d1 + b.d1),
        None if a.d2 is None else 0.5 * (a.d2 + b.d2),
    )


# ---------------------------------------------------------------------------
# One-stage steppers (implicit Euler and implicit midpoint)


def step_implicit_euler(theta0, h, eps, K, problem: Problem, cfg: StepperConfig) -> StepResult:
    """One regularized parametric implicit Euler step."""
    return _step_onestage(theta0, h, eps, K, problem, cfg, midpoint=False)


def step_midpoint(theta0, h, eps, K, problem: Problem, cfg: StepperConfig) -> StepResult:
    """One regularized parametric implicit midpoint step."""
    return _step_onestage(theta0, h, eps, K, problem, cfg, midpoint=True)


def _design_matrix(cfg, problem, theta, shift):
    """B = Phi'(theta) - shift * (A Phi)'(theta) sampled at the nodes."""
    jac = cfg.param.jacobian(theta, cfg.rule.nodes, problem.a_order)
    return jac.J0 - shift * apply_A_jacobian(problem, jac)


def _step_onestage(theta0, h, eps, K, problem, cfg, midpoint):
    _check_step_args(h, eps, K)
    theta0 = np.asarray(theta0, dtype=float)
    rule, par = cfg.rule, cfg.param
    order = problem.a_order
    jet0 = par.eval(theta0, rule.nodes, order)
    u0 = jet0.values
    shift = 0.5 * h if midpoint else h

    solver = None
    if not cfg.refresh_jacobian:
        solver = RegularizedSolver(rule, _design_matrix(cfg, problem, theta0, shift))

    theta = theta0.copy()
    trace = GNTrace(eps_used=eps)
    for _ in range(K):
        jet = par.eval(theta, rule.nodes, order)
        f_val = apply_f(problem, _average_jets(jet, jet0) if midpoint else jet)
        r = (jet.values - u0) / h - f_val
        if not np.all(np.isfinite(r)):
            raise DivergenceError("non-finite residual in Gauss-Newton iteration",
                                  trace=trace, last_theta=theta)
        sigma = (theta - theta0) / h
        if cfg.refresh_jacobian:
            solver = RegularizedSolver(rule, _design_matrix(cfg, problem, theta, shift))
        sol = solver.solve(r, sigma, eps, cfg.weights, cfg.damping)
        theta = theta + h * sol.x
        trace.deltas.append(sol.delta)
        trace.theta_increment_norms.append(float(np.linalg.norm(h * sol.x)))
        trace.guard_ratios.append(h * sol.delta / (eps * eps))
        if sol.delta < cfg.delta_exit:
            break
    return StepResult(theta, trace)


# ---------------------------------------------------------------------------
# Multistage stepper with stage diagonalization


def step_irk(theta0, spec: SpectralTableau, h, eps, K, problem: Problem,
             cfg: StepperConfig) -> StepResult:
    """One step of an s-stage implicit Runge-Kutta method in parameter space.

    Stage increments are computed in the eigenbasis of inv(A), one complex
    regularized least-squares problem per stage (one per conjugate pair when
    the shortcut applies). The grid value is the last stage for stiffly
    accurate tableaux and a quadrature-weighted refit otherwise.
    """
    _check_step_args(h, eps, K)
    theta0 = np.asarray(theta0, dtype=float)
    rule, par = cfg.rule, cfg.param
    order = problem.a_order
    tab = spec.tableau
    s = tab.stages
    lam, T, T_inv = spec.eigenvalues, spec.T, spec.T_inv

    jet0 = par.eval(theta0, rule.nodes, order)
    u0 = jet0.values

    plan = _conjugate_pairs(spec) if cfg.pair_shortcut else None
    solve_stages = [i for i, _ in plan] if plan is not None else list(range(s))

    solvers = {}
    if not cfg.refresh_jacobian:
        jac = par.jacobian(theta0, rule.nodes, order)
        J0, JA = jac.J0, apply_A_jacobian(problem, jac)
        for i in solve_stages:
            solvers[i] = RegularizedSolver(rule, lam[i] * J0 - h * JA)

    Theta = np.tile(theta0, (s, 1))
    trace = GNTrace(eps_used=eps, stage_deltas=[])
    for _ in range(K):
        jets = [par.eval(Theta[i], rule.nodes, order) for i in range(s)]
        F = np.stack([apply_f(problem, jets[i]) for i in range(s)])
        U = np.stack([jets[i].values for i in range(s)])
        S = -(U - u0[None, :]) / h + tab.A @ F
        if not np.all(np.isfinite(S)):
            raise DivergenceError("non-finite stage residual", trace=trace, last_theta=Theta)
        S_hat = T_inv @ S
        Sig_hat = T_inv @ ((Theta - theta0[None, :]) / h)

        x_hat = np.zeros((s, theta0.size), dtype=complex)
        stage_deltas = np.zeros(s)
        for i in solve_stages:
            if cfg.refresh_jacobian:
                jac = par.jacobian(Theta[i], rule.nodes, order)
                solver = RegularizedSolver(
                    rule, lam[i] * jac.J0 - h * apply_A_jacobian(problem, jac))
            else:
                solver = solvers[i]
            sol = solver.solve(-lam[i] * S_hat[i], Sig_hat[i], eps, cfg.weights, damping=1.0)
            x_hat[i] = sol.x_min
            stage_deltas[i] = sol.delta
        if plan is not None:
            for i, j in plan:
                if j is not None:
                    x_hat[j] = np.conj(x_hat[i])
                    stage_deltas[j] = stage_deltas[i]
        else:
            x_hat = _symmetrize_pairs(spec, x_hat)

        delta_theta = h * (T @ x_hat)
        scale = max(1.0, float(np.max(np.abs(delta_theta.real))))
        if float(np.max(np.abs(delta_theta.imag))) > 1e-10 * scale:
            raise NumericError("stage recovery produced a non-real parameter increment")
        delta_theta = delta_theta.real

        Theta = Theta + cfg.damping * delta_theta
        delta_k = float(np.sqrt(np.sum(stage_deltas ** 2)))
        trace.deltas.append(delta_k)
        trace.stage_deltas.append([float(d) for d in stage_deltas])
        trace.theta_increment_norms.append(float(np.linalg.norm(cfg.damping * delta_theta)))
        trace.guard_ratios.append(h * delta_k / (eps * eps))
        if delta_k < cfg.delta_exit:
            break

    if tab.stiffly_accurate:
        theta1 = Theta[-1].copy()
    else:
        stage_values = [par.eval(Theta[i], rule.nodes, 0).values for i in range(s)]
        theta1, fit_deltas = grid_update_gauss(
            theta0, list(Theta), stage_values, spec.grid_weights, eps, h, cfg)
        trace.fit_deltas = fit_deltas
    return StepResult(theta1, trace, [Theta[i].copy() for i in range(s)])


def _symmetrize_pairs(spec: SpectralTableau, x_hat):
    """Average conjugate-pair solutions so the recovered increment is real."""
    plan = _conjugate_pairs(spec)
    if plan is None:
        return x_hat
    out = x_hat.copy()
    for i, j in plan:
        if j is not None:
            avg = 0.5 * (x_hat[i] + np.conj(x_hat[j]))
            out[i], out[j] = avg, np.conj(avg)
    return out


def grid_update_gauss(theta0, stage_params, stage_values, w, eps, h,
                      cfg: StepperConfig, K_fit: int | None = None):
    """Fit theta1 so that Phi(theta1) matches the weighted stage combination.

    Target: y1 = u0 + sum_i w_i (U_i - u0). The starting iterate is the
    corresponding parameter combination; each Gauss-Newton iteration
    linearizes Phi at the current iterate. Returns (theta1, fit_deltas).
    """
    K_fit = cfg.fit_iterations if K_fit is None else K_fit
    rule, par = cfg.rule, cfg.param
    theta0 = np.asarray(theta0, dtype=float)
    u0 = par.eval(theta0, rule.nodes, 0).values
    y_target = u0 + sum(wi * (ui - u0) for wi, ui in zip(w, stage_values))

    theta = theta0 + sum(wi * (ti - theta0) for wi, ti in zip(w, stage_params))
    fit_deltas = []
    for _ in range(K_fit):
        jet = par.eval(theta, rule.nodes, 0)
        # rate units throughout, as in the step iterations: the unknown is
        # Delta theta / h, so the misfit enters divided by h as well
        r = (jet.values - y_target) / h
        if not np.all(np.isfinite(r)):
            raise DivergenceError("non-finite residual in grid-value fit", last_theta=theta)
        sigma = (theta - theta0) / h
        jac = par.jacobian(theta, rule.nodes, 0)
        sol = RegularizedSolver(rule, jac.J0).solve(r, sigma, eps, cfg.weights, cfg.damping)
        step = h * sol.x
        theta = theta + step
        fit_deltas.append(sol.delta)
        if sol.delta < cfg.delta_exit:
            break
        if np.linalg.norm(step) <= 1e-13 * max(1.0, float(np.linalg.norm(theta))):
            break
    return theta, fit_deltas


# ---------------------------------------------------------------------------
# Fourier-Galerkin oracle


def _fourier_operator_blocks(problem: Problem, k_max: int):
    """Block-diagonal action of A on [1, cos kx, sin kx, ...] coefficients."""
    blocks = [np.zeros((1, 1))]
    for k in range(1, k_max + 1):
        if problem.kind == "transport":
            blocks.append(np.array([[0.0, float(k)], [-float(k), 0.0]]))
        elif problem.kind == "heat":
            blocks.append(np.array([[-float(k * k), 0.0], [0.0, -float(k * k)]]))
        else:
            blocks.append(np.zeros((2, 2)))
    return blocks


def galerkin_step(method, coeffs, h, problem: Problem):
    """Exact non-parametric step on Fourier coefficients (linear problems only).

    method is "euler", "midpoint", or a ButcherTableau. Serves as the oracle
    that the parametric steppers must reproduce for a linear parametrization.
    """
    if problem.g is not None:
        raise UnsupportedMethodError("the Galerkin oracle supports g == 0 only")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.ndim != 1 or coeffs.size % 2 == 0:
        raise ConfigurationError(f"coefficients must have odd length, got {coeffs.shape}")
    k_max = (coeffs.size - 1) // 2
    blocks = _fourier_operator_blocks(problem, k_max)
    out = np.empty_like(coeffs)
    pos = 0
    for D in blocks:
        nb = D.shape[0]
        y0 = coeffs[pos:pos + nb]
        eye = np.eye(nb)
        if method == "euler":
            y1 = np.linalg.solve(eye - h * D, y0)
        elif method == "midpoint":
            y1 = np.linalg.solve(eye - 0.5 * h * D, y0 + 0.5 * h * (D @ y0))
        elif isinstance(method, ButcherTableau):
            s = method.stages
            big = np.eye(s * nb) - h * np.kron(method.A, D)
            Y = np.linalg.solve(big, np.tile(y0, s)).reshape(s, nb)
            y1 = y0 + h * sum(bi * (D @ Yi) for bi, Yi in zip(method.b, Y))
        else:
            raise UnsupportedMethodError(f"unknown oracle method {method!r}")
        out[pos:pos + nb] = y1
        pos += nb
    return out
