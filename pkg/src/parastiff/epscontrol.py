"""Selection and per-step adaptation of the regularization parameter.

The search starts coarse (eps = 1) and repeatedly halves eps while the
defect keeps improving; the run-time update nudges eps by factors of two to
keep the defect near a user tolerance and the ratio delta/eps moderate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError

EPS_MIN = 2.0 ** -60
EPS_MAX = 2.0 ** 60


@dataclass(frozen=True)
class EpsPolicy:
    """Thresholds controlling the eps search and the per-step update."""

    delta_tol: float
    ratio_cap_search: float = 10.0
    ratio_cap_run: float = 100.0
    eps_init: float = 1.0
    slack_up: float = 1.5
    factor: float = 2.0
    max_probes: int = 60

    def __post_init__(self):
        for name in ("delta_tol", "ratio_cap_search", "ratio_cap_run",
                     "eps_init", "slack_up", "factor"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"EpsPolicy.{name} must be positive")


def select_initial_eps(probe, policy: EpsPolicy) -> tuple[float, float]:
    """Halve eps from eps_init until a stopping rule fires.

    probe(eps) performs one full Gauss-Newton solve at the initial time and
    returns its final defect. Stops at the first eps with
    delta < delta_tol, or delta > slack_up * delta_min, or
    delta/eps > ratio_cap_search; returns the (eps, delta) pair achieving
    the smallest defect seen, including the stopping evaluation.
    """
    eps = policy.eps_init
    best_eps, best_delta = eps, math.inf
    for attempt in range(policy.max_probes):
        delta = float(probe(eps))
        if not math.isfinite(delta):
            if attempt == 0:
                raise ConfigurationError(f"probe diverged at initial eps = {eps}")
            break
        if delta < best_delta:
            best_eps, best_delta = eps, delta
        if delta < policy.delta_tol:
            break
        if delta > policy.slack_up * best_delta:
            break
        if delta / eps > policy.ratio_cap_search:
            break
        eps = eps / policy.factor
        if eps < EPS_MIN:
            break
    return best_eps, best_delta


def update_eps(eps: float, delta: float, policy: EpsPolicy) -> float:
    """Per-step eps update from the previous step's final defect.

    Doubles eps when the parameter-rate ratio delta/eps exceeds
    ratio_cap_run or the defect is far below tolerance; halves it when the
    defect is far above tolerance and the ratio still allows; growing wins
    when both conditions fire. The 10x tolerance band is fixed.
    """
    grow = delta / eps > policy.ratio_cap_run or delta < policy.delta_tol / 10.0
    shrink = delta > 10.0 * policy.delta_tol and delta / eps < policy.ratio_cap_search
    if grow:
        eps = eps * policy.factor
    elif shrink:
        eps = eps / policy.factor
    return min(max(eps, EPS_MIN), EPS_MAX)
