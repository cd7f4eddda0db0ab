import numpy as np
import pytest

import parastiff as ps
from parastiff.errors import UnsupportedMethodError
from parastiff.steppers import StepperConfig, grid_update_gauss


def fourier_setup(rule, k_max=6, seed=1):
    rng = np.random.default_rng(seed)
    par = ps.FourierParametrization(k_max)
    decay = (1.0 + np.arange(par.n_params) // 2) ** 2
    theta0 = rng.normal(0, 1, par.n_params) / decay
    cfg = StepperConfig(rule=rule, param=par)
    return par, theta0, cfg


def fourier_l2_norm(coeffs):
    return np.sqrt(2 * np.pi * coeffs[0] ** 2 + np.pi * np.sum(coeffs[1:] ** 2))


# --- spectral tableaux ----------------------------------------------------


def test_gauss2_spectral_data():
    spec = ps.build_spectral(ps.gauss2_tableau())
    lam = np.sort_complex(spec.eigenvalues)
    want = np.sort_complex(np.array([3 + 1j * np.sqrt(3), 3 - 1j * np.sqrt(3)]))
    assert np.max(np.abs(lam - want)) < 1e-12
    assert abs(np.linalg.norm(spec.T, 2) - 1.0) < 1e-12
    assert np.max(np.abs(spec.grid_weights - np.array([-np.sqrt(3), np.sqrt(3)]))) < 1e-12
    assert abs(spec.mu - 1.0 / 3.0) < 1e-12
    assert not spec.tableau.stiffly_accurate


def test_radau2_spectral_data():
    spec = ps.build_spectral(ps.radau2_tableau())
    lam = np.sort_complex(spec.eigenvalues)
    want = np.sort_complex(np.array([2 + 1j * np.sqrt(2), 2 - 1j * np.sqrt(2)]))
    assert np.max(np.abs(lam - want)) < 1e-12
    assert abs(spec.mu - 0.5) < 1e-12
    assert spec.tableau.stiffly_accurate
    assert np.max(np.abs(spec.tableau.b - spec.tableau.A[-1])) < 1e-14


def test_implicit_euler_as_one_stage_tableau():
    spec = ps.build_spectral(ps.implicit_euler_tableau())
    assert np.allclose(spec.eigenvalues, [1.0])
    assert np.allclose(np.abs(spec.T), [[1.0]])
    assert np.allclose(spec.grid_weights, [1.0])


def test_spectral_reconstruction_and_eigensolve_agree():
    for tab in (ps.gauss2_tableau(), ps.radau2_tableau(), ps.midpoint_tableau()):
        spec = ps.build_spectral(tab)
        A_inv = np.linalg.inv(tab.A)
        recon = spec.T @ np.diag(spec.eigenvalues) @ spec.T_inv
        assert np.max(np.abs(recon - A_inv)) < 1e-12
        generic = np.sort_complex(np.linalg.eigvals(A_inv))
        assert np.max(np.abs(np.sort_complex(spec.eigenvalues) - generic)) < 1e-12


def test_wrong_half_plane_rejected():
    tab = ps.ButcherTableau(np.array([[-1.0]]), np.array([1.0]), np.array([1.0]))
    with pytest.raises(UnsupportedMethodError):
        ps.build_spectral(tab)


# --- fixed point at f == 0 --------------------------------------------------


def test_zero_problem_is_fixed_point(rule20):
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem("zero")
    res = ps.step_implicit_euler(theta0, 0.1, 1e-3, 5, p, cfg)
    assert np.array_equal(res.theta_next, theta0)
    assert res.trace.deltas == [0.0]
    res = ps.step_midpoint(theta0, 0.1, 1e-3, 5, p, cfg)
    assert np.array_equal(res.theta_next, theta0)
    spec = ps.build_spectral(ps.gauss2_tableau())
    res = ps.step_irk(theta0, spec, 0.1, 1e-3, 5, p, cfg)
    assert np.max(np.abs(res.theta_next - theta0)) < 1e-13
    assert res.trace.deltas[0] == 0.0


# --- oracle equivalence on the linear parametrization -----------------------


@pytest.mark.parametrize("problem", ["transport", "heat"])
@pytest.mark.parametrize("h", [0.1, 0.01])
def test_one_stage_steppers_match_galerkin(rule20, problem, h):
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem(problem)
    for method, fn in (("euler", ps.step_implicit_euler), ("midpoint", ps.step_midpoint)):
        res = fn(theta0, h, 1e-12, 2, p, cfg)
        oracle = ps.galerkin_step(method, theta0, h, p)
        assert np.max(np.abs(res.theta_next - oracle)) < 1e-8
        assert res.trace.iterations <= 2


@pytest.mark.parametrize("problem", ["transport", "heat"])
@pytest.mark.parametrize("h", [0.1, 0.01])
@pytest.mark.parametrize("tableau", ["gauss2", "radau2"])
def test_irk_matches_galerkin(rule20, problem, h, tableau):
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem(problem)
    tab = ps.gauss2_tableau() if tableau == "gauss2" else ps.radau2_tableau()
    spec = ps.build_spectral(tab)
    res = ps.step_irk(theta0, spec, h, 1e-12, 2, p, cfg)
    oracle = ps.galerkin_step(tab, theta0, h, p)
    assert np.max(np.abs(res.theta_next - oracle)) < 1e-8


def test_euler_matches_direct_diagonal_solve(rule20):
    # heat: theta1 = (I - h D)^{-1} theta0 with D = diag(0, -1, -1, -4, -4, ...)
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem("heat")
    h = 0.05
    res = ps.step_implicit_euler(theta0, h, 1e-12, 2, p, cfg)
    k = np.repeat(np.arange(par.k_max + 1), 2)[1:]
    direct = theta0 / (1.0 + h * k**2)
    assert np.max(np.abs(res.theta_next - direct)) < 1e-8


def test_midpoint_matches_cayley_solve(rule20):
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem("heat")
    h = 0.05
    res = ps.step_midpoint(theta0, h, 1e-12, 2, p, cfg)
    k = np.repeat(np.arange(par.k_max + 1), 2)[1:]
    direct = theta0 * (1.0 - 0.5 * h * k**2) / (1.0 + 0.5 * h * k**2)
    assert np.max(np.abs(res.theta_next - direct)) < 1e-8


def test_irk_stage_solve_matches_complex_diagonal_solve(rule20):
    # transport stages in the eigenbasis obey (lam_i - h D) Yhat_i = lam_i yhat_i
    # at the first iteration from Theta_i = theta0; verified per Fourier block.
    par, theta0, cfg = fourier_setup(rule20, k_max=3)
    p = ps.make_problem("transport")
    spec = ps.build_spectral(ps.gauss2_tableau())
    h = 0.1
    res = ps.step_irk(theta0, spec, h, 1e-12, 20, p, cfg)
    # oracle: solve the full coupled stage system per block
    blocks = [np.zeros((1, 1))]
    for k in range(1, par.k_max + 1):
        blocks.append(np.array([[0.0, k], [-k, 0.0]]))
    pos = 0
    stages_direct = [np.empty_like(theta0) for _ in range(2)]
    for D in blocks:
        nb = D.shape[0]
        big = np.eye(2 * nb) - h * np.kron(spec.tableau.A, D)
        Y = np.linalg.solve(big, np.tile(theta0[pos:pos + nb], 2)).reshape(2, nb)
        for i in range(2):
            stages_direct[i][pos:pos + nb] = Y[i]
        pos += nb
    for i in range(2):
        assert np.max(np.abs(res.stage_params[i] - stages_direct[i])) < 1e-8


def test_pair_shortcut_equals_full_solve(rule20):
    par, theta0, cfg = fourier_setup(rule20)
    cfg_full = StepperConfig(rule=rule20, param=par, pair_shortcut=False)
    p = ps.make_problem("transport")
    spec = ps.build_spectral(ps.radau2_tableau())
    a = ps.step_irk(theta0, spec, 0.05, 1e-6, 4, p, cfg)
    b = ps.step_irk(theta0, spec, 0.05, 1e-6, 4, p, cfg_full)
    assert np.max(np.abs(a.theta_next - b.theta_next)) < 1e-12
    assert np.max(np.abs(np.array(a.trace.deltas) - np.array(b.trace.deltas))) < 1e-12


def test_stiffly_accurate_uses_last_stage(rule20):
    par, theta0, cfg = fourier_setup(rule20)
    p = ps.make_problem("heat")
    spec = ps.build_spectral(ps.radau2_tableau())
    res = ps.step_irk(theta0, spec, 0.05, 1e-8, 3, p, cfg)
    assert np.array_equal(res.theta_next, res.stage_params[-1])


# --- grid update -------------------------------------------------------------


def test_grid_update_trivial_stages(rule20, mlp, gaussian_ckpt):
    theta0 = gaussian_ckpt[0]
    cfg = StepperConfig(rule=rule20, param=mlp)
    u0 = mlp.eval(theta0, rule20.nodes, 0).values
    w = np.array([-np.sqrt(3), np.sqrt(3)])
    theta1, fit_deltas = grid_update_gauss(theta0, [theta0, theta0], [u0, u0],
                                           w, 1e-6, 0.1, cfg)
    assert np.max(np.abs(theta1 - theta0)) < 1e-10
    assert fit_deltas[-1] < 1e-6


def test_grid_update_exact_for_linear_parametrization(rule20):
    par, theta0, cfg = fourier_setup(rule20)
    rng = np.random.default_rng(71)
    stages = [theta0 + 0.05 * rng.normal(size=theta0.size) for _ in range(2)]
    vals = [par.eval(t, rule20.nodes, 0).values for t in stages]
    w = np.array([-np.sqrt(3), np.sqrt(3)])
    theta1, _ = grid_update_gauss(theta0, stages, vals, w, 1e-12, 0.1, cfg, K_fit=1)
    expected = theta0 + sum(wi * (t - theta0) for wi, t in zip(w, stages))
    assert np.max(np.abs(theta1 - expected)) < 1e-8


def test_grid_update_fit_beats_parameter_combination(rule20, mlp, gaussian_ckpt):
    # option (iii) refit should track the stage combination target better than
    # the raw option (ii) parameter combination on the nonlinear network
    theta0 = gaussian_ckpt[0]
    cfg = StepperConfig(rule=rule20, param=mlp, refresh_jacobian=True)
    p = ps.make_problem("transport")
    spec = ps.build_spectral(ps.gauss2_tableau())
    h = 0.025
    res = ps.step_irk(theta0, spec, h, 1e-4, 20, p, cfg)
    u0 = mlp.eval(theta0, rule20.nodes, 0).values
    vals = [mlp.eval(t, rule20.nodes, 0).values for t in res.stage_params]
    target = u0 + sum(wi * (v - u0) for wi, v in zip(spec.grid_weights, vals))
    theta_ii = theta0 + sum(wi * (t - theta0)
                            for wi, t in zip(spec.grid_weights, res.stage_params))
    err_iii = ps.norm(rule20, mlp.eval(res.theta_next, rule20.nodes, 0).values - target)
    err_ii = ps.norm(rule20, mlp.eval(theta_ii, rule20.nodes, 0).values - target)
    assert err_iii < 0.5 * err_ii


# --- Galerkin oracle ---------------------------------------------------------


def test_galerkin_heat_single_mode_euler():
    coeffs = np.array([0.0, 0.0, 1.0])  # sin(x)
    h = 0.2
    out = ps.galerkin_step("euler", coeffs, h, ps.make_problem("heat"))
    assert abs(out[2] - 1.0 / (1.0 + h)) < 1e-14


def test_galerkin_heat_euler_contractive():
    rng = np.random.default_rng(73)
    p = ps.make_problem("heat")
    for _ in range(10):
        y0 = rng.normal(size=9)
        y1 = ps.galerkin_step("euler", y0, 0.3, p)
        assert fourier_l2_norm(y1) <= fourier_l2_norm(y0) + 1e-12


def test_galerkin_transport_norm_conserved():
    rng = np.random.default_rng(79)
    p = ps.make_problem("transport")
    y0 = rng.normal(size=13)
    for method in ("midpoint", ps.gauss2_tableau()):
        y1 = ps.galerkin_step(method, y0, 0.3, p)
        assert abs(fourier_l2_norm(y1) - fourier_l2_norm(y0)) < 1e-12


def test_galerkin_rejects_nonlinearity():
    p = ps.make_problem("heat", g=np.sin, lipschitz_g=1.0)
    with pytest.raises(UnsupportedMethodError):
        ps.galerkin_step("euler", np.zeros(3), 0.1, p)


# --- invariants --------------------------------------------------------------


def test_guard_ratios_recorded(rule20, mlp, gaussian_ckpt):
    theta0 = gaussian_ckpt[0]
    cfg = StepperConfig(rule=rule20, param=mlp)
    p = ps.make_problem("transport")
    h, eps = 0.05, 1e-2
    res = ps.step_implicit_euler(theta0, h, eps, 5, p, cfg)
    assert len(res.trace.guard_ratios) == res.trace.iterations
    for g, d in zip(res.trace.guard_ratios, res.trace.deltas):
        assert abs(g - h * d / eps**2) < 1e-12 * max(1.0, g)
    assert res.trace.guard_violations(1e9) == 0


def test_parameter_deviation_bounded_by_increments(rule20, mlp, gaussian_ckpt):
    theta0 = gaussian_ckpt[0]
    cfg = StepperConfig(rule=rule20, param=mlp)
    p = ps.make_problem("transport")
    theta = theta0.copy()
    eps = 1e-2
    total_increment = 0.0
    for _ in range(5):
        res = ps.step_implicit_euler(theta, 0.02, eps, 10, p, cfg)
        theta = res.theta_next
        total_increment += sum(res.trace.theta_increment_norms)
    drift = np.linalg.norm(theta - theta0)
    assert drift <= total_increment + 1e-12
    print(f"deviation ratio ||theta_n - theta_0|| / (n eps) = {drift / (5 * eps):.3f}")
