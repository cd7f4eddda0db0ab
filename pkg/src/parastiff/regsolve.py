"""Regularized linear least-squares kernel shared by all integrators.

Minimizes, over x in R^Q (or C^Q),

    ||B x + r||_W^2 + w1 eps^2 ||x + sigma||^2 + w2 eps^2 ||x||^2

where ||.||_W is the discrete L2 norm of a quadrature rule and the parameter
space norms are Euclidean. Solved by the shifted normal equations with a
Cholesky factorization; the Tikhonov shift (w1 + w2) eps^2 keeps the Gram
matrix well conditioned at every eps used in practice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigurationError, NumericError, ShapeError
from .quadrature import QuadratureRule


@dataclass(frozen=True)
class RegWeights:
    """Weights of the two regularization terms (relative-increment, absolute)."""

    w1: float = 0.5
    w2: float = 1.0

    def __post_init__(self):
        if self.w1 < 0 or self.w2 < 0:
            raise ConfigurationError(f"regularization weights must be nonnegative: {self}")


@dataclass
class RegLsqSolution:
    """Minimizer and attained defect of one regularized solve.

    x is the (possibly damped) step actually applied; x_min the exact
    minimizer. delta and residual_norm are evaluated at x_min, so
    delta^2 = residual_norm^2 + w1 eps^2 ||x_min + sigma||^2
            + w2 eps^2 ||x_min||^2.
    """

    x: np.ndarray
    x_min: np.ndarray
    delta: float
    residual_norm: float


class RegularizedSolver:
    """Caches the weighted Gram matrix of a fixed B for repeated solves.

    Within one time step the design matrix B and eps are fixed while the
    right-hand side changes every Gauss-Newton iteration, so the Cholesky
    factor is reused across iterations.
    """

    def __init__(self, rule: QuadratureRule, B):
        B = np.asarray(B)
        if B.ndim != 2 or B.shape[0] != rule.node_count:
            raise ShapeError(f"B has shape {B.shape}, expected ({rule.node_count}, Q)")
        if not np.all(np.isfinite(B)):
            raise NumericError("non-finite entries in B")
        self.rule = rule
        self.B = B
        self._wB = rule.weights[:, None] * B
        self._gram = B.conj().T @ self._wB
        self._factor = None
        self._factor_key = None

    @property
    def n_params(self) -> int:
        return self.B.shape[1]

    def solve(self, r, sigma, eps: float, weights: RegWeights = RegWeights(),
              damping: float = 1.0) -> RegLsqSolution:
        if not (np.isfinite(eps) and eps > 0):
            raise ConfigurationError(f"eps must be positive and finite, got {eps}")
        if weights.w1 + weights.w2 <= 0:
            raise ConfigurationError("w1 + w2 must be positive when eps > 0")
        if not 0 < damping <= 1:
            raise ConfigurationError(f"damping must lie in (0, 1], got {damping}")
        r = np.asarray(r)
        sigma = np.asarray(sigma)
        Q = self.n_params
        if r.shape != (self.rule.node_count,):
            raise ShapeError(f"r has shape {r.shape}, expected ({self.rule.node_count},)")
        if sigma.shape != (Q,):
            raise ShapeError(f"sigma has shape {sigma.shape}, expected ({Q},)")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(sigma))):
            raise NumericError("non-finite entries in right-hand side")

        key = (eps, weights.w1, weights.w2)
        if self._factor_key != key:
            shifted = self._gram.copy()
            shifted[np.diag_indices(Q)] += (weights.w1 + weights.w2) * eps * eps
            try:
                self._factor = cho_factor(shifted, lower=True)
            except np.linalg.LinAlgError as exc:  # guarded; unreachable for eps > 0
                raise NumericError(f"factorization failed: {exc}") from exc
            self._factor_key = key

        rhs = -(self._wB.conj().T @ r + weights.w1 * eps * eps * sigma)
        x_min = cho_solve(self._factor, rhs)
        resid = self.B @ x_min + r
        res_sq = float(np.sum(self.rule.weights * np.abs(resid) ** 2))
        reg_sq = (weights.w1 * eps * eps * float(np.sum(np.abs(x_min + sigma) ** 2))
                  + weights.w2 * eps * eps * float(np.sum(np.abs(x_min) ** 2)))
        return RegLsqSolution(
            x=damping * x_min if damping != 1.0 else x_min,
            x_min=x_min,
            delta=float(np.sqrt(res_sq + reg_sq)),
            residual_norm=float(np.sqrt(res_sq)),
        )


def solve_regularized(rule: QuadratureRule, B, r, sigma, eps: float,
                      weights: RegWeights = RegWeights(),
                      damping: float = 1.0) -> RegLsqSolution:
    """One-shot entry point; see RegularizedSolver for the repeated-solve path."""
    return RegularizedSolver(rule, B).solve(r, sigma, eps, weights, damping)
