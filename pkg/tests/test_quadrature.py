import numpy as np
import pytest

import parastiff as ps
from parastiff.errors import ConfigurationError, ShapeError


def test_paper_rule_node_count_and_weight_sum(rule20):
    assert rule20.node_count == 80
    assert rule20.subinterval_count == 20
    assert abs(np.sum(rule20.weights) - 2 * np.pi) < 1e-12 * 2 * np.pi


def test_one_point_rule_is_midpoint():
    rule = ps.build_composite_gauss(0.0, 1.0, 1, 1)
    assert rule.nodes.tolist() == [0.5]
    assert rule.weights.tolist() == [1.0]


def test_odd_polynomial_integrates_to_zero(rule50):
    val = ps.inner_product(rule50, rule50.nodes**7, np.ones_like(rule50.nodes))
    assert abs(val) < 1e-12 * np.pi**8  # analytic integral of x^7 over (-pi, pi) is 0


def test_rule_invariants(rule20, rule50):
    for rule in (rule20, rule50):
        assert np.all(rule.weights > 0)
        assert np.all(np.diff(rule.nodes) > 0)
        assert rule.nodes[0] >= rule.a and rule.nodes[-1] <= rule.b
        assert rule.node_count == rule.subinterval_count * rule.nodes_per_subinterval


def test_exactness_per_subinterval():
    # degree <= 2n-1 exactness on a single cell, against the analytic integral
    rng = np.random.default_rng(7)
    for nodes_per in (1, 2, 4, 7, 10):
        rule = ps.build_composite_gauss(-1.0, 2.0, 1, nodes_per)
        for _ in range(20):
            coeffs = rng.normal(size=2 * nodes_per)  # degree 2n-1
            poly = np.polynomial.Polynomial(coeffs)
            exact = poly.integ()(2.0) - poly.integ()(-1.0)
            got = float(np.sum(rule.weights * poly(rule.nodes)))
            assert abs(got - exact) <= 1e-12 * max(1.0, abs(exact))


def test_inner_product_examples(rule20):
    ones = np.ones(rule20.node_count)
    assert abs(ps.inner_product(rule20, ones, ones) - 2 * np.pi) < 1e-12
    s, c = np.sin(rule20.nodes), np.cos(rule20.nodes)
    assert abs(ps.inner_product(rule20, s, c)) < 1e-12
    assert abs(ps.inner_product(rule20, s, s) - np.pi) < 1e-12


def test_norm_positivity(rule20):
    zero = np.zeros(rule20.node_count)
    assert ps.norm(rule20, zero) == 0.0
    rng = np.random.default_rng(0)
    f = rng.normal(size=rule20.node_count)
    assert ps.norm(rule20, f) > 0


def test_complex_inner_product_conjugates_first_argument(rule20):
    f = (1 + 2j) * np.ones(rule20.node_count)
    val = ps.inner_product(rule20, f, f)
    assert abs(val.imag) < 1e-12
    assert abs(val.real - 5 * 2 * np.pi) < 1e-10


def test_invalid_construction():
    with pytest.raises(ConfigurationError):
        ps.build_composite_gauss(1.0, 0.0, 10, 4)
    with pytest.raises(ConfigurationError):
        ps.build_composite_gauss(0.0, 1.0, 0, 4)
    with pytest.raises(ConfigurationError):
        ps.build_composite_gauss(0.0, 1.0, 10, 11)


def test_length_mismatch(rule20):
    with pytest.raises(ShapeError):
        ps.inner_product(rule20, np.ones(3), np.ones(rule20.node_count))


def test_rule_is_immutable(rule20):
    with pytest.raises(ValueError):
        rule20.nodes[0] = 0.0
