import numpy as np
import pytest

import parastiff as ps
from parastiff.errors import ConfigurationError, ContractError


def test_transport_applies_first_derivative(rule20):
    x = rule20.nodes
    jet = ps.fourier_eval(np.array([0.0, 0.0, 1.0]), x, 1)  # sin(x)
    out = ps.apply_f(ps.make_problem("transport"), jet)
    assert np.max(np.abs(out - np.cos(x))) < 1e-13


def test_heat_applies_second_derivative(rule20):
    x = rule20.nodes
    theta = np.zeros(5)
    theta[4] = 1.0  # sin(2x)
    jet = ps.fourier_eval(theta, x, 2)
    out = ps.apply_f(ps.make_problem("heat"), jet)
    assert np.max(np.abs(out + 4 * np.sin(2 * x))) < 1e-12


def test_zero_state_with_sine_nonlinearity(rule20):
    theta = np.zeros(3)
    jet = ps.fourier_eval(theta, rule20.nodes, 2)
    p = ps.make_problem("heat", g=np.sin, lipschitz_g=1.0)
    assert np.all(ps.apply_f(p, jet) == 0.0)


def test_insufficient_jet_order_raises(rule20):
    jet = ps.fourier_eval(np.zeros(3), rule20.nodes, 1)
    with pytest.raises(ContractError):
        ps.apply_f(ps.make_problem("heat"), jet)


def test_unknown_kind_rejected():
    with pytest.raises(ConfigurationError):
        ps.make_problem("wave")


def test_transport_jacobian_is_differentiation_matrix(rule20):
    k_max = 3
    theta = np.zeros(1 + 2 * k_max)
    jac = ps.fourier_jacobian(theta, rule20.nodes, 1)
    JA = ps.apply_A_jacobian(ps.make_problem("transport"), jac)
    x = rule20.nodes
    # column for cos(kx) is -k sin(kx); for sin(kx) is k cos(kx)
    for k in range(1, k_max + 1):
        assert np.max(np.abs(JA[:, 2 * k - 1] + k * np.sin(k * x))) < 1e-13
        assert np.max(np.abs(JA[:, 2 * k] - k * np.cos(k * x))) < 1e-13
    assert np.all(JA[:, 0] == 0.0)


def test_heat_constant_mode_column_zero(rule20):
    jac = ps.fourier_jacobian(np.zeros(7), rule20.nodes, 2)
    JA = ps.apply_A_jacobian(ps.make_problem("heat"), jac)
    assert np.all(JA[:, 0] == 0.0)


def test_mlp_A_jacobian_matches_finite_differences(arch, rule20):
    rng = np.random.default_rng(31)
    theta = rng.normal(0, 0.5, arch.param_count)
    x = rule20.nodes[::8]
    p = ps.make_problem("heat")
    JA = ps.apply_A_jacobian(p, ps.mlp_jacobian(theta, arch, x, 2))
    e = 1e-6
    for q in rng.choice(arch.param_count, 12, replace=False):
        tp, tm = theta.copy(), theta.copy()
        tp[q] += e
        tm[q] -= e
        fd = (ps.apply_f(p, ps.mlp_eval(tp, arch, x, 2))
              - ps.apply_f(p, ps.mlp_eval(tm, arch, x, 2))) / (2 * e)
        denom = max(np.max(np.abs(fd)), 1e-8)
        assert np.max(np.abs(JA[:, q] - fd)) / denom < 1e-5


def test_dissipativity_surrogate_on_fourier(rule20):
    rng = np.random.default_rng(37)
    k_max = 5
    theta = rng.normal(size=1 + 2 * k_max)
    jet = ps.fourier_eval(theta, rule20.nodes, 2)
    u = jet.values
    heat = ps.inner_product(rule20, u, ps.apply_f(ps.make_problem("heat"), jet))
    transport = ps.inner_product(rule20, u, ps.apply_f(ps.make_problem("transport"), jet))
    assert heat <= 1e-12
    assert abs(transport) < 1e-12
