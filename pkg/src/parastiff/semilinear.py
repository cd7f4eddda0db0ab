"""Semilinear right-hand sides f(y) = Ay + g(y) on periodic [-pi, pi].

A is a constant-coefficient spatial derivative: first order for transport,
second order for heat. The optional pointwise nonlinearity g never enters
the linearization; the steppers always use A alone as the frozen Jacobian.
A "zero" kind (f identically 0) is included as a debug problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError, ContractError
from .netparam import JacobianBatch, JetBatch

_A_ORDER = {"transport": 1, "heat": 2, "zero": 0}


@dataclass(frozen=True)
class Problem:
    kind: str
    g: Callable[[np.ndarray], np.ndarray] | None = None
    lipschitz_g: float = 0.0

    def __post_init__(self):
        if self.kind not in _A_ORDER:
            raise ConfigurationError(f"unknown problem kind {self.kind!r}")

    @property
    def a_order(self) -> int:
        return _A_ORDER[self.kind]


def make_problem(name: str, g=None, lipschitz_g: float = 0.0) -> Problem:
    return Problem(name, g, lipschitz_g)


def apply_f(p: Problem, jet: JetBatch) -> np.ndarray:
    """Sample f(u) = Au + g(u) at the jet's points."""
    if jet.max_order < p.a_order:
        raise ContractError(f"{p.kind} needs jets of order {p.a_order}, got {jet.max_order}")
    if p.kind == "transport":
        out = jet.d1
    elif p.kind == "heat":
        out = jet.d2
    else:
        out = np.zeros_like(jet.values)
    if p.g is not None:
        out = out + p.g(jet.values)
    return out


def apply_A_jacobian(p: Problem, jac: JacobianBatch) -> np.ndarray:
    """Parameter Jacobian of A Phi(theta), i.e. the jet Jacobian of order a_order."""
    if jac.max_order < p.a_order:
        raise ContractError(f"{p.kind} needs Jacobians of order {p.a_order}, got {jac.max_order}")
    if p.kind == "transport":
        return jac.J1
    if p.kind == "heat":
        return jac.J2
    return np.zeros_like(jac.J0)
