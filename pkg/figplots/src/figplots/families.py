"""One rendering function per figure family.

Every function takes file path(s) plus an output path, writes one image,
and returns a small dict of facts about what was drawn (used by tests and
the CLI summary). Inputs are never modified; re-running overwrites the
image deterministically.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_checkpoint_weights, read_csv

ORDER_GUIDES = (1, 2, 3, 4)


def _save(fig, out_path):
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return out_path


def plot_initial_fit(fit_csv, out_path):
    """Fitted network against its target, with the pointwise error below."""
    data = read_csv(fit_csv, "fit")
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True,
                                   height_ratios=[2, 1])
    ax0.plot(data["x"], data["y0"], "k-", lw=1.2, label="target")
    ax0.plot(data["x"], data["u0"], "C0--", lw=1.2, label="network")
    ax0.set_ylabel("u(x)")
    ax0.legend()
    ax1.plot(data["x"], data["error"], "C3-", lw=1.0)
    ax1.set_xlabel("x")
    ax1.set_ylabel("error")
    max_err = float(np.max(np.abs(data["error"])))
    ax1.set_title(f"max |error| = {max_err:.2e}", fontsize=9)
    return {"path": _save(fig, out_path), "max_error": max_err}


def plot_weights(checkpoint_path, out_path):
    """Sorted parameter magnitudes of a fitted network."""
    theta = read_checkpoint_weights(checkpoint_path)
    mags = np.sort(np.abs(theta))[::-1]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(np.arange(1, mags.size + 1), np.maximum(mags, 1e-17), "C0.")
    ax.set_xlabel("rank")
    ax.set_ylabel("|parameter|")
    ax.set_title(f"{mags.size} parameters, max {mags[0]:.3f}")
    return {"path": _save(fig, out_path), "max_weight": float(mags[0])}


def plot_eps_sweep(sweep_csv, out_path):
    """Final defect of one Gauss-Newton solve against the regularization."""
    data = read_csv(sweep_csv, "eps_sweep")
    fig, ax = plt.subplots(figsize=(6, 4))
    finite = np.isfinite(data["delta"])
    ax.loglog(data["eps"][finite], data["delta"][finite], "C0o-", ms=4)
    lo = float(np.min(data["eps"]))
    hi = float(np.max(data["eps"]))
    guide = np.array([lo, hi])
    ax.loglog(guide, guide * float(data["delta"][finite][0] / data["eps"][finite][0]),
              "k--", lw=0.8, label="delta = O(eps)")
    ax.set_xlabel("eps")
    ax.set_ylabel("final defect")
    ax.legend()
    return {"path": _save(fig, out_path), "points": int(finite.sum())}


def plot_convergence(convergence_csv, out_path):
    """Error against step size on log-log axes with order guide lines."""
    data = read_csv(convergence_csv, "convergence")
    h, err = data["h"], data["l2_error"]
    finite = np.isfinite(err) & (err > 0)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(h[finite], err[finite], "C0o-", label="measured")
    slope = math_slope(h[finite], err[finite])
    anchor_h = h[finite]
    anchor_e = err[finite][np.argmax(anchor_h)]
    hr = np.array([np.min(anchor_h), np.max(anchor_h)])
    for order in ORDER_GUIDES:
        ax.loglog(hr, anchor_e * (hr / hr[1]) ** order, "--", lw=0.7,
                  label=f"order {order}")
    ax.set_xlabel("h")
    ax.set_ylabel("L2 error at T")
    ax.set_title(f"observed order {slope:.2f}")
    ax.legend(fontsize=8)
    return {"path": _save(fig, out_path), "slope": slope}


def math_slope(h, err):
    if h.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


def plot_defects(defects_csv, out_path):
    """Fan of per-step defect traces, one panel per regularization value."""
    data = read_csv(defects_csv, "defects")
    eps_values = np.unique(data["eps"])[::-1]
    fig, axes = plt.subplots(1, eps_values.size, figsize=(3.2 * eps_values.size, 3.4),
                             sharey=True, squeeze=False)
    lines = 0
    for ax, eps in zip(axes[0], eps_values):
        sel = data["eps"] == eps
        for step in np.unique(data["step_index"][sel]):
            mask = sel & (data["step_index"] == step)
            order = np.argsort(data["iteration"][mask])
            ax.semilogy(data["iteration"][mask][order], data["delta"][mask][order],
                        "C0-", alpha=0.35, lw=0.8)
            lines += 1
        ax.set_title(f"eps = {eps:g}", fontsize=9)
        ax.set_xlabel("iteration")
    axes[0][0].set_ylabel("defect")
    return {"path": _save(fig, out_path), "lines": lines}


def plot_longtime(longtime_csv, out_path):
    """Error and parameter drift over a long integration."""
    data = read_csv(longtime_csv, "longtime")
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5.5), sharex=True)
    ax0.semilogy(data["t"], data["l2_error"], "C0-", lw=0.9)
    ax0.set_ylabel("L2 error")
    ax1.plot(data["t"], data["theta_drift"], "C1-", lw=0.9)
    ax1.set_ylabel("||theta - theta_0||")
    ax1.set_xlabel("t")
    return {"path": _save(fig, out_path), "steps": int(data["t"].size)}
