"""Stage diagonalization and the Fourier-Galerkin oracle.

Shows the spectral data of the 2-stage tableaux and confirms that, for a
linear Fourier parametrization with negligible regularization, one
parametric Runge-Kutta step reproduces the exact Galerkin step to machine
precision.
"""

import numpy as np

import parastiff as ps

for tab in (ps.gauss2_tableau(), ps.radau2_tableau()):
    spec = ps.build_spectral(tab)
    print(f"{tab.name}: eigenvalues of inv(A) = {np.round(spec.eigenvalues, 12)}")
    print(f"         mu = {spec.mu:.6f}, grid weights = {np.round(spec.grid_weights, 12)}, "
          f"stiffly accurate = {tab.stiffly_accurate}")

rule = ps.build_composite_gauss(-np.pi, np.pi, 20, 4)
par = ps.FourierParametrization(6)
rng = np.random.default_rng(1)
theta0 = rng.normal(0, 1, par.n_params) / (1.0 + np.arange(par.n_params) // 2) ** 2
cfg = ps.StepperConfig(rule=rule, param=par)

print("\nparametric step vs exact Galerkin step (eps = 1e-12, K = 2):")
for problem in ("transport", "heat"):
    p = ps.make_problem(problem)
    for tab in (ps.gauss2_tableau(), ps.radau2_tableau()):
        spec = ps.build_spectral(tab)
        res = ps.step_irk(theta0, spec, 0.05, 1e-12, 2, p, cfg)
        oracle = ps.galerkin_step(tab, theta0, 0.05, p)
        print(f"  {problem:9s} {tab.name}: max coefficient difference "
              f"{np.max(np.abs(res.theta_next - oracle)):.2e}")
