"""Experiment harness: configuration, integration loops, CSV artifacts.

Every experiment is described by a flat key=value config file (see configs/)
and produces CSV files with a fixed header; floats are printed with 17
significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .epscontrol import EPS_MAX, EpsPolicy, select_initial_eps, update_eps
from .errors import ConfigurationError, DivergenceError, NumericError
from .initfit import adam_prefit, fictitious_flow_fit, init_params, misfit, target_by_name
from .netparam import PeriodicMlp, default_architecture, load_checkpoint, save_checkpoint
from .quadrature import build_composite_gauss
from .refsol import heat_reference, l2_error, transport_reference
from .regsolve import RegWeights
from .semilinear import make_problem
from .steppers import (
    StepperConfig,
    build_spectral,
    gauss2_tableau,
    radau2_tableau,
    step_implicit_euler,
    step_irk,
    step_midpoint,
)

METHOD_ORDER = {"euler": 1, "midpoint": 2, "radau2": 3, "gauss2": 4}


@dataclass
class ExperimentConfig:
    """Flat experiment description; field names double as config keys."""

    name: str = "experiment"
    experiment: str = "convergence"
    problem: str = "transport"
    method: str = "euler"
    T: float = 1.0
    step_counts: tuple = (10, 20, 40, 80, 160)
    eps_mode: str = "adaptive"
    eps_value: float = 1e-2
    eps_list: tuple = ()
    delta_tol_order: int = 0  # 0: use the method's classical order
    settle_incr_ratio: float = 0.01
    reg_w1: float = 0.5
    reg_w2: float = 1.0
    eps_init: float = 1.0
    ratio_cap_search: float = 10.0
    ratio_cap_run: float = 100.0
    slack_up: float = 1.5
    K: int = 20
    fit_iterations: int = 8
    damping: float = 1.0
    quad_subintervals: int = 20
    quad_nodes_per: int = 4
    checkpoint: str = ""
    refresh_jacobian: bool = False
    seed: int = 0
    guard_c: float = 10.0
    k_max: int = 32
    periods: int = 10
    steps_per_period: int = 100
    target: str = "gaussian"
    target_smoothing: float = 0.0
    prefit_iters: int = 5000
    prefit_lr: float = 1e-2
    flow_steps: int = 100
    flow_eps: float = 1e-4
    flow_repeats: int = 2
    plot_points: int = 1000
    sweep_eps_max: float = 1.0
    sweep_eps_min: float = 1e-6
    sweep_count: int = 25
    threads: int = 1

    def order(self) -> int:
        if self.delta_tol_order > 0:
            return self.delta_tol_order
        if self.method not in METHOD_ORDER:
            raise ConfigurationError(f"unknown method {self.method!r}")
        return METHOD_ORDER[self.method]


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(key: str, raw: str):
    ftype = _FIELD_TYPES[key]
    raw = raw.strip()
    if ftype == "tuple":
        if not raw:
            return ()
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if key == "step_counts":
            return tuple(int(p) for p in parts)
        return tuple(float(p) for p in parts)
    if ftype == "bool":
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"{key}: expected a boolean, got {raw!r}")
    if ftype == "int":
        return int(raw)
    if ftype == "float":
        return float(raw)
    return raw


def load_config(path, **overrides) -> ExperimentConfig:
    """Parse a flat key=value config file; later keys win; '#' comments."""
    path = Path(path)
    values = {"name": path.stem}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _FIELD_TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    cfg = ExperimentConfig(**values)
    for key, val in overrides.items():
        if val is not None:
            cfg = replace(cfg, **{key: val})
    cfg = replace(cfg, checkpoint=str(_resolve_path(cfg.checkpoint, path)) if cfg.checkpoint else "")
    return cfg


def _resolve_path(target, config_path):
    target = Path(target)
    if target.is_absolute():
        return target
    for base in (Path.cwd(), config_path.parent, config_path.parent.parent):
        if (base / target).exists():
            return base / target
    return target  # fit output: may not exist yet


# ---------------------------------------------------------------------------
# Run context


@dataclass
class RunContext:
    cfg: ExperimentConfig
    rule: object
    par: object
    theta0: np.ndarray
    problem: object
    stepper_cfg: StepperConfig
    spectral: object | None


def build_context(cfg: ExperimentConfig) -> RunContext:
    rule = build_composite_gauss(-np.pi, np.pi, cfg.quad_subintervals, cfg.quad_nodes_per)
    if cfg.checkpoint:
        theta0, arch, _ = load_checkpoint(cfg.checkpoint)
        par = PeriodicMlp(arch)
    else:
        raise ConfigurationError("this experiment needs a checkpoint path")
    problem = make_problem(cfg.problem)
    stepper_cfg = StepperConfig(
        rule=rule,
        param=par,
        weights=RegWeights(cfg.reg_w1, cfg.reg_w2),
        damping=cfg.damping,
        refresh_jacobian=cfg.refresh_jacobian,
        guard_constant=cfg.guard_c,
        fit_iterations=cfg.fit_iterations,
        settle_incr_ratio=cfg.settle_incr_ratio,
    )
    spectral = None
    if cfg.method == "gauss2":
        spectral = build_spectral(gauss2_tableau())
    elif cfg.method == "radau2":
        spectral = build_spectral(radau2_tableau())
    return RunContext(cfg, rule, par, theta0, problem, stepper_cfg, spectral)


def step_once(ctx: RunContext, theta, h, eps, K=None):
    K = ctx.cfg.K if K is None else K
    if ctx.cfg.method == "euler":
        return step_implicit_euler(theta, h, eps, K, ctx.problem, ctx.stepper_cfg)
    if ctx.cfg.method == "midpoint":
        return step_midpoint(theta, h, eps, K, ctx.problem, ctx.stepper_cfg)
    if ctx.spectral is None:
        raise ConfigurationError(f"unknown method {ctx.cfg.method!r}")
    return step_irk(theta, ctx.spectral, h, eps, K, ctx.problem, ctx.stepper_cfg)


def reference_at(ctx: RunContext, t: float) -> np.ndarray:
    """Reference solution sampled at the solver's quadrature nodes."""
    if ctx.cfg.problem == "transport":
        return transport_reference(ctx.par, ctx.theta0, t, ctx.rule.nodes)
    if ctx.cfg.problem == "heat":
        subs = max(ctx.cfg.quad_subintervals,
                   math.ceil(4 * ctx.cfg.k_max / ctx.cfg.quad_nodes_per) + 8)
        proj_rule = build_composite_gauss(-np.pi, np.pi, subs, ctx.cfg.quad_nodes_per)
        u0 = ctx.par.eval(ctx.theta0, proj_rule.nodes, 0).values
        return heat_reference(proj_rule, u0, t, ctx.cfg.k_max, ctx.rule.nodes)
    raise ConfigurationError(f"no reference for problem {ctx.cfg.problem!r}")


# ---------------------------------------------------------------------------
# Integration loops


@dataclass
class RunStats:
    h: float
    n_steps: int
    l2_error: float
    mean_iterations: float
    mean_eps: float
    mean_final_delta: float
    guard_max: float
    guard_mean: float
    guard_violations: int
    theta_drift: float
    diverged: bool = False


def probe_factory(ctx: RunContext, h: float):
    """probe(eps) = final defect of one full Gauss-Newton solve at t0.

    Divergence and factorization failures (the Tikhonov shift eps^2 can
    fall below the roundoff floor of the rank-deficient Gram matrix once
    eps is tiny) both mean "this eps is out of reach" for the search.
    """

    def probe(eps):
        try:
            res = step_once(ctx, ctx.theta0, h, eps)
        except (DivergenceError, NumericError):
            return math.inf
        if not res.trace.settled(incr_ratio=ctx.stepper_cfg.settle_incr_ratio):
            return math.inf  # iteration failed to settle: defect meaningless
        return res.trace.final_delta

    return probe


def choose_eps(ctx: RunContext, h: float) -> tuple[float, EpsPolicy | None]:
    if ctx.cfg.eps_mode == "fixed":
        return ctx.cfg.eps_value, None
    if ctx.cfg.eps_mode != "adaptive":
        raise ConfigurationError(f"unknown eps_mode {ctx.cfg.eps_mode!r}")
    policy = EpsPolicy(delta_tol=h ** ctx.cfg.order(),
                       ratio_cap_search=ctx.cfg.ratio_cap_search,
                       ratio_cap_run=ctx.cfg.ratio_cap_run,
                       eps_init=ctx.cfg.eps_init,
                       slack_up=ctx.cfg.slack_up)
    eps, _ = select_initial_eps(probe_factory(ctx, h), policy)
    return eps, policy


def integrate_run(ctx: RunContext, n_steps: int, collect=None) -> RunStats:
    """Integrate to T = n_steps * h and compare with the reference.

    collect(step_index, t, theta, trace, eps) is invoked after every step
    when given (used by the defects and longtime experiments).
    """
    h = ctx.cfg.T / n_steps
    eps, policy = choose_eps(ctx, h)
    theta = ctx.theta0.copy()
    iters, eps_used, final_deltas, guards = [], [], [], []
    diverged = False
    for n in range(n_steps):
        attempts = 0
        while True:
            try:
                res = step_once(ctx, theta, h, eps)
            except (DivergenceError, NumericError):
                # A failed solve means eps is too small for this step.
                res = None
            if res is not None and (policy is None
                    or res.trace.settled(incr_ratio=ctx.stepper_cfg.settle_incr_ratio)):
                break
            # In adaptive mode reject failed or non-settled steps, back off
            # and redo the step; fixed-eps runs keep whatever they produce.
            attempts += 1
            if policy is None or attempts > 60 or eps >= EPS_MAX:
                break
            eps = min(2.0 * eps, EPS_MAX)
        if res is None:
            diverged = True
            break
        theta = res.theta_next
        iters.append(res.trace.iterations)
        eps_used.append(eps)
        final_deltas.append(res.trace.final_delta)
        guards.extend(res.trace.guard_ratios)
        if collect is not None:
            collect(n, (n + 1) * h, theta, res.trace, eps)
        if policy is not None:
            # A non-settled iteration reports an infinite defect to the
            # controller, which then grows eps back toward stability.
            settled = res.trace.settled(incr_ratio=ctx.stepper_cfg.settle_incr_ratio)
            feedback = res.trace.final_delta if settled else math.inf
            eps = update_eps(eps, feedback, policy)
    if diverged or not np.all(np.isfinite(theta)):
        err = math.inf
        drift = math.inf
    else:
        try:
            u = ctx.par.eval(theta, ctx.rule.nodes, 0).values
            err = l2_error(ctx.rule, u, reference_at(ctx, ctx.cfg.T))
        except ConfigurationError:
            err = math.nan  # debug problems have no reference solution
        drift = float(np.linalg.norm(theta - ctx.theta0))
    guards = guards or [0.0]
    return RunStats(
        h=h,
        n_steps=n_steps,
        l2_error=err,
        mean_iterations=float(np.mean(iters)) if iters else 0.0,
        mean_eps=float(np.mean(eps_used)) if eps_used else 0.0,
        mean_final_delta=float(np.mean(final_deltas)) if final_deltas else math.inf,
        guard_max=float(np.max(guards)),
        guard_mean=float(np.mean(guards)),
        guard_violations=sum(1 for g in guards if g > ctx.cfg.guard_c),
        theta_drift=drift,
        diverged=diverged,
    )


def loglog_slope(h_values, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    h = np.asarray(h_values, dtype=float)
    e = np.asarray(errors, dtype=float)
    mask = np.isfinite(e) & (e > 0)
    if mask.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(h[mask]), np.log(e[mask]), 1)[0])


def prefloor_slope(h_values, errors, drop_ratio: float = 0.5) -> tuple[float, float]:
    """Slope over the leading points that still decrease by drop_ratio per halving.

    Returns (slope, floor) where floor is the smallest error observed. Points
    are taken in order of decreasing h; the prefix ends at the first point
    that fails to improve on its predecessor by the given factor.
    """
    order = np.argsort(h_values)[::-1]
    h = np.asarray(h_values, dtype=float)[order]
    e = np.asarray(errors, dtype=float)[order]
    keep = [0]
    for i in range(1, len(e)):
        if np.isfinite(e[i]) and e[i] <= drop_ratio * e[keep[-1]]:
            keep.append(i)
        else:
            break
    floor = float(np.nanmin(e))
    if len(keep) < 2:
        return math.nan, floor
    return loglog_slope(h[keep], e[keep]), floor


# ---------------------------------------------------------------------------
# CSV output


def format_float(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (int, np.integer)):
                cells.append(str(int(v)))
            else:
                cells.append(format_float(v))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# Experiment entry points; each returns (paths, flagged)


def run_convergence(cfg: ExperimentConfig, out_dir):
    ctx = build_context(cfg)
    stats = _pmap(lambda n: integrate_run(ctx, n), list(cfg.step_counts), cfg.threads)
    stats.sort(key=lambda s: s.n_steps)
    rows = [(s.h, s.l2_error, s.mean_iterations, s.mean_eps, s.mean_final_delta)
            for s in stats]
    guard_rows = [(s.h, s.guard_max, s.guard_mean, s.guard_violations, s.n_steps)
                  for s in stats]
    out_dir = Path(out_dir)
    main_csv = write_csv(out_dir / f"{cfg.name}.csv",
                         ["h", "l2_error", "mean_iterations", "mean_eps", "mean_final_delta"],
                         rows)
    guard_csv = write_csv(out_dir / f"{cfg.name}_guard.csv",
                          ["h", "guard_max", "guard_mean", "guard_violations", "n_steps"],
                          guard_rows)
    errors = [s.l2_error for s in stats]
    slope = loglog_slope([s.h for s in stats], errors)
    flagged = (not all(math.isfinite(e) for e in errors)) or (not math.isfinite(slope)) \
        or slope < 0.3
    return [main_csv, guard_csv], flagged, stats


def run_defects(cfg: ExperimentConfig, out_dir):
    ctx = build_context(cfg)
    eps_values = cfg.eps_list or (cfg.eps_value,)

    def one(eps):
        local_rows = []

        def collect(n, t, theta, trace, eps_now):
            for k, d in enumerate(trace.deltas):
                local_rows.append((n, k, d, eps_now))

        run_ctx = RunContext(replace(cfg, eps_mode="fixed", eps_value=eps),
                             ctx.rule, ctx.par, ctx.theta0, ctx.problem,
                             ctx.stepper_cfg, ctx.spectral)
        integrate_run(run_ctx, cfg.step_counts[0], collect=collect)
        return local_rows

    chunks = _pmap(one, list(eps_values), cfg.threads)
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (-r[3], r[0], r[1]))
    path = write_csv(Path(out_dir) / f"{cfg.name}.csv",
                     ["step_index", "iteration", "delta", "eps"],
                     [(r[0], r[1], r[2], r[3]) for r in rows])
    return [path], False, rows


def run_eps_sweep(cfg: ExperimentConfig, out_dir):
    ctx = build_context(cfg)
    h = cfg.T / cfg.step_counts[0]
    grid = np.geomspace(cfg.sweep_eps_max, cfg.sweep_eps_min, cfg.sweep_count)
    probe = probe_factory(ctx, h)
    deltas = _pmap(probe, list(grid), cfg.threads)
    rows = sorted(zip(grid, deltas), key=lambda r: -r[0])
    path = write_csv(Path(out_dir) / f"{cfg.name}.csv", ["eps", "delta"], rows)
    return [path], False, rows


def run_longtime(cfg: ExperimentConfig, out_dir):
    ctx = build_context(cfg)
    period = 2.0 * np.pi
    h = period / cfg.steps_per_period
    n_steps = cfg.periods * cfg.steps_per_period
    cfg_run = replace(cfg, T=n_steps * h)
    ctx = RunContext(cfg_run, ctx.rule, ctx.par, ctx.theta0, ctx.problem,
                     ctx.stepper_cfg, ctx.spectral)
    rows = []

    def collect(n, t, theta, trace, eps_now):
        u = ctx.par.eval(theta, ctx.rule.nodes, 0).values
        err = l2_error(ctx.rule, u, transport_reference(ctx.par, ctx.theta0, t, ctx.rule.nodes))
        drift = float(np.linalg.norm(theta - ctx.theta0))
        rows.append((t, err, drift, trace.final_delta, eps_now))

    stats = integrate_run(ctx, n_steps, collect=collect)
    path = write_csv(Path(out_dir) / f"{cfg.name}.csv",
                     ["t", "l2_error", "theta_drift", "delta", "eps"], rows)
    flagged = stats.diverged or not math.isfinite(stats.l2_error)
    return [path], flagged, rows


def run_fit(cfg: ExperimentConfig, out_dir):
    if not cfg.checkpoint:
        raise ConfigurationError("fit needs a checkpoint output path")
    rule = build_composite_gauss(-np.pi, np.pi, cfg.quad_subintervals, cfg.quad_nodes_per)
    arch = default_architecture()
    par = PeriodicMlp(arch)
    target = target_by_name(cfg.target, cfg.target_smoothing)
    rng = np.random.default_rng(cfg.seed)
    theta = init_params(arch, rng)
    theta, history = adam_prefit(target, theta, par, rule,
                                 iters=cfg.prefit_iters, lr=cfg.prefit_lr)
    prefit_misfit = history[-1]
    theta, pass_misfits = fictitious_flow_fit(target, theta, par, rule,
                                              steps=cfg.flow_steps, eps=cfg.flow_eps,
                                              repeats=cfg.flow_repeats)
    final_misfit = misfit(par, theta, target, rule)
    ckpt_path = Path(cfg.checkpoint)
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ckpt_path, theta, arch, meta={
        "target": cfg.target,
        "target_smoothing": format_float(cfg.target_smoothing),
        "seed": cfg.seed,
        "prefit_misfit": format_float(prefit_misfit),
        "final_misfit": format_float(final_misfit),
    })
    out_dir = Path(out_dir)
    x = np.linspace(-np.pi, np.pi, cfg.plot_points)
    u0 = par.eval(theta, x, 0).values
    y0 = target(x)
    fit_csv = write_csv(out_dir / f"{cfg.name}.csv",
                        ["x", "u0", "y0", "error"],
                        list(zip(x, u0, y0, u0 - y0)))
    report_rows = [(k, m) for k, m in enumerate(history)]
    report_rows += [(len(history) + i, m) for i, m in enumerate(pass_misfits)]
    report_csv = write_csv(out_dir / f"{cfg.name}_report.csv",
                           ["iteration", "misfit"], report_rows)
    return [ckpt_path, fit_csv, report_csv], False, {
        "prefit_misfit": prefit_misfit,
        "final_misfit": final_misfit,
        "pass_misfits": pass_misfits,
    }
