import numpy as np
import pytest

import parastiff as ps
from parastiff.errors import AliasingError


def test_transport_reference_at_zero_time(mlp, gaussian_ckpt, rule20):
    theta0 = gaussian_ckpt[0]
    ref = ps.transport_reference(mlp, theta0, 0.0, rule20.nodes)
    assert np.array_equal(ref, mlp.eval(theta0, rule20.nodes, 0).values)


def test_transport_reference_periodic(mlp, gaussian_ckpt, rule20):
    theta0 = gaussian_ckpt[0]
    a = ps.transport_reference(mlp, theta0, 0.0, rule20.nodes)
    b = ps.transport_reference(mlp, theta0, 2 * np.pi, rule20.nodes)
    assert np.max(np.abs(a - b)) < 1e-13


def test_transport_reference_fourier_half_period(rule20):
    par = ps.FourierParametrization(2)
    theta = np.zeros(5)
    theta[2] = 1.0  # sin(x)
    ref = ps.transport_reference(par, theta, np.pi, rule20.nodes)
    assert np.max(np.abs(ref + np.sin(rule20.nodes))) < 1e-12


def test_heat_reference_single_mode(rule50):
    u0 = np.sin(rule50.nodes)
    ref = ps.heat_reference(rule50, u0, 1.0, 8, rule50.nodes)
    assert np.max(np.abs(ref - np.exp(-1.0) * np.sin(rule50.nodes))) < 1e-12


def test_heat_reference_reproduces_smooth_data_at_t_zero(rule50):
    proj_rule = ps.build_composite_gauss(-np.pi, np.pi, 60, 4)
    u0 = np.exp(-4.0 * proj_rule.nodes**2)
    ref = ps.heat_reference(proj_rule, u0, 0.0, 30, proj_rule.nodes)
    assert np.max(np.abs(ref - u0)) < 1e-10


def test_heat_reference_long_time_limit(rule50):
    u0 = np.exp(-4.0 * rule50.nodes**2) + 0.3
    mean = np.sum(rule50.weights * u0) / (2 * np.pi)
    ref = ps.heat_reference(rule50, u0, 1e3, 8, rule50.nodes)
    assert np.max(np.abs(ref - mean)) < 1e-12


def test_heat_reference_contractive(rule50):
    rng = np.random.default_rng(3)
    u0 = rng.normal(size=rule50.node_count)
    n0 = ps.norm(rule50, u0)
    for t in (0.0, 0.01, 0.1, 1.0):
        ref = ps.heat_reference(rule50, u0, t, 20, rule50.nodes)
        assert ps.norm(rule50, ref) <= n0 + 1e-12


def test_heat_reference_aliasing_guard(rule20):
    with pytest.raises(AliasingError):
        ps.heat_reference(rule20, np.zeros(rule20.node_count), 1.0, 32, rule20.nodes)


def test_l2_error_examples(rule20):
    u = np.sin(rule20.nodes)
    assert ps.l2_error(rule20, u, u) == 0.0
    ref = np.zeros(rule20.node_count)
    assert abs(ps.l2_error(rule20, u, ref) - np.sqrt(np.pi)) < 1e-12


def test_l2_error_triangle_inequality(rule20):
    rng = np.random.default_rng(5)
    for _ in range(25):
        a, b, c = rng.normal(size=(3, rule20.node_count))
        assert ps.l2_error(rule20, a, c) <= (
            ps.l2_error(rule20, a, b) + ps.l2_error(rule20, b, c) + 1e-12)
