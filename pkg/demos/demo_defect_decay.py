"""Gauss-Newton defect traces within one implicit time step.

Runs a single Radau IIA step of the transport equation from the shipped
smooth network at several regularization strengths and prints the defect
per iteration: rapidly decaying, then saturating at an eps-dependent level.
"""

import numpy as np

import parastiff as ps

theta0, arch, _ = ps.load_checkpoint("checkpoints/gaussian.ckpt")
rule = ps.build_composite_gauss(-np.pi, np.pi, 20, 4)
cfg = ps.StepperConfig(rule=rule, param=ps.PeriodicMlp(arch), refresh_jacobian=True)
p = ps.make_problem("transport")
spec = ps.build_spectral(ps.radau2_tableau())

h = 0.05
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    res = ps.step_irk(theta0, spec, h, eps, 12, p, cfg)
    line = "  ".join(f"{d:9.3e}" for d in res.trace.deltas[:8])
    print(f"eps = {eps:7.0e}: delta^k = {line}")
    print(f"{'':14s} guard h*delta/eps^2 at exit: {res.trace.guard_ratios[-1]:9.2e}")
