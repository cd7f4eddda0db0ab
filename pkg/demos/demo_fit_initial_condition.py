"""Fitting the periodic network to an initial condition (reduced budget).

Runs the two-phase construction: a rough Adam prefit of the quadrature
misfit, then the fictitious-time flow integrated with the regularized
explicit RK4 method. The shipped checkpoints use the full budgets in
configs/fit-*.cfg.
"""

import numpy as np

import parastiff as ps
from parastiff.initfit import adam_prefit, fictitious_flow_fit, init_params, misfit

arch = ps.default_architecture()
par = ps.PeriodicMlp(arch)
rule = ps.build_composite_gauss(-np.pi, np.pi, 20, 4)
target = ps.gaussian_target()

rng = np.random.default_rng(42)
theta = init_params(arch, rng)
print(f"initial misfit: {misfit(par, theta, target, rule):.3e}")

theta, history = adam_prefit(target, theta, par, rule, iters=1500, lr=1e-2)
print(f"after 1500 Adam iterations: {history[-1]:.3e}")

theta, passes = fictitious_flow_fit(target, theta, par, rule, steps=50, eps=1e-4, repeats=2)
for i, m in enumerate(passes, 1):
    print(f"after flow pass {i}: {m:.3e}")

x = np.linspace(-np.pi, np.pi, 9)
u = par.eval(theta, x, 0).values
print("\n  x      Phi(theta)(x)   y0(x)")
for xi, ui in zip(x, u):
    print(f"{xi:+.3f}   {ui:+.6f}   {target(np.array([xi]))[0]:+.6f}")
