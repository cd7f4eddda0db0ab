"""Quadrature rules and the periodic network, end to end.

Builds the composite Gauss rule used throughout, evaluates the shipped
Gaussian-fit network with its spatial jets, and cross-checks the exact
Jacobians against finite differences.
"""

import numpy as np

import parastiff as ps

rule = ps.build_composite_gauss(-np.pi, np.pi, 20, 4)
print(f"composite Gauss rule: {rule.node_count} nodes, sum of weights = {np.sum(rule.weights):.15f}")
print(f"integral of sin^2 over (-pi, pi): {ps.inner_product(rule, np.sin(rule.nodes), np.sin(rule.nodes)):.15f}")

theta, arch, meta = ps.load_checkpoint("checkpoints/gaussian.ckpt")
print(f"\nloaded checkpoint: {arch.param_count} parameters, fit misfit {meta['final_misfit']}")

jet = ps.mlp_eval(theta, arch, rule.nodes, max_order=2)
print(f"network range: [{jet.values.min():.4f}, {jet.values.max():.4f}]")
print(f"||u'||_L2 = {ps.norm(rule, jet.d1):.4f}, ||u''||_L2 = {ps.norm(rule, jet.d2):.4f}")

# exact Jacobians vs central differences in a random parameter direction
rng = np.random.default_rng(0)
v = rng.normal(size=arch.param_count)
v /= np.linalg.norm(v)
jac = ps.mlp_jacobian(theta, arch, rule.nodes, max_order=2)
e = 1e-6
fd = (ps.mlp_eval(theta + e * v, arch, rule.nodes, 0).values
      - ps.mlp_eval(theta - e * v, arch, rule.nodes, 0).values) / (2 * e)
print(f"\ndirectional Jacobian vs finite differences: max abs diff "
      f"{np.max(np.abs(jac.J0 @ v - fd)):.2e}")
