"""Figure rendering for the command line's report outputs.

Each function draws one figure from already-computed data and saves it next
to the delimited output it illustrates.  Rendering is headless (Agg) and
side-effect free beyond the written file.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .fitting import EpsilonLaw, LawParams
from .hardware import HardwareParams, t_update
from .planner import Plan, ScalingRow, t_conv


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_sweep(points, path, law: LawParams | None = None) -> None:
    """Measured update counts vs batch size, optionally with the fitted law."""
    ms = np.array([pt.minibatch for pt in points], dtype=float)
    means = np.array([pt.mean for pt in points])
    stds = np.array([pt.std for pt in points])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ms, means, yerr=stds, fmt="o", capsize=3, label="measured")
    if law is not None:
        grid = np.geomspace(ms.min(), ms.max(), 200)
        ax.plot(grid, law.predict(grid), "-", label=(
            f"fit: {law.n_inf:.3g} + {law.alpha:.3g}/M (R²={law.r_squared:.3f})"
        ))
        ax.legend()
    ax.set_xscale("log", base=2)
    ax.set_xlabel("mini-batch size M")
    ax.set_ylabel("updates to converge")
    _save(fig, path)


def plot_law_fit(rows, law: LawParams, path) -> None:
    """Aggregated (M, mean, std) rows against the fitted inverse law."""
    ms = np.array([m for m, _, _, _ in rows], dtype=float)
    means = np.array([mean for _, mean, _, _ in rows])
    stds = np.array([std for _, _, std, _ in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(ms, means, yerr=stds, fmt="o", capsize=3, label="measured")
    grid = np.geomspace(ms.min(), ms.max(), 200)
    ax.plot(grid, law.predict(grid), "-", label=(
        f"fit: {law.n_inf:.3g} + {law.alpha:.3g}/M (R²={law.r_squared:.3f})"
    ))
    ax.set_xscale("log", base=2)
    ax.set_xlabel("mini-batch size M")
    ax.set_ylabel("updates to converge")
    ax.set_title(f"threshold epsilon = {law.epsilon:g}")
    ax.legend()
    _save(fig, path)


def plot_epsilon_dependence(laws, eps_law: EpsilonLaw, path) -> None:
    """Fitted parameters vs threshold on log-log axes, with the power-law fits."""
    eps = np.array([law.epsilon for law in laws])
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, values, c, slope, name in (
        (axes[0], [law.n_inf for law in laws], eps_law.c_ninf, eps_law.slope_ninf, "n_inf"),
        (axes[1], [law.alpha for law in laws], eps_law.c_alpha, eps_law.slope_alpha, "alpha"),
    ):
        ax.loglog(eps, values, "o", label="fits")
        grid = np.geomspace(eps.min(), eps.max(), 100)
        ax.loglog(grid, c * grid**slope, "-", label=f"slope {slope:.2f}")
        ax.set_xlabel("epsilon")
        ax.set_ylabel(name)
        ax.legend()
    _save(fig, path)


def plot_hardware_fit(timings, hw: HardwareParams, path) -> None:
    """Measured per-update times against the fitted knee/communication model."""
    fig, ax = plt.subplots(figsize=(6, 4))
    by_p: dict[int, list[tuple[int, float]]] = {}
    for m, p, t in timings:
        by_p.setdefault(p, []).append((m, t))
    for p in sorted(by_p):
        pts = sorted(by_p[p])
        ms = np.array([m for m, _ in pts], dtype=float)
        ts = [t for _, t in pts]
        ax.plot(ms, ts, "o", label=f"measured, P={p}")
        grid = np.geomspace(ms.min(), ms.max(), 200)
        ax.plot(grid, [t_update(m, p, hw) for m in grid], "-",
                label=f"model, P={p}")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("mini-batch size M")
    ax.set_ylabel("seconds per update")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_plans(law: LawParams, hw: HardwareParams, plans: list[Plan], path) -> None:
    """Time-to-converge vs batch size for each planned learner count."""
    fig, ax = plt.subplots(figsize=(6, 4))
    top = max(max(plan.m_opt for plan in plans) * 4, hw.m_t * 4)
    grid = np.geomspace(1, top, 400)
    for plan in plans:
        curve = [t_conv(m, plan.p, law, hw) for m in grid]
        (line,) = ax.plot(grid, curve, label=f"P={plan.p}")
        ax.plot([plan.m_opt], [plan.t_conv], "o", color=line.get_color())
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("mini-batch size M")
    ax.set_ylabel("predicted seconds to converge")
    ax.legend(fontsize=8)
    _save(fig, path)


def plot_scaling(rows: list[ScalingRow], path) -> None:
    """Strong, weak, and optimal scaling curves."""
    ps = np.array([r.p for r in rows], dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ps, [r.t_strong for r in rows], "o-", label="strong (fixed total batch)")
    ax.plot(ps, [r.t_weak for r in rows], "s-", label="weak (fixed per-learner batch)")
    ax.plot(ps, [r.t_optimal for r in rows], "^-", label="optimal batch per p")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("learner count P")
    ax.set_ylabel("predicted seconds to converge")
    ax.legend()
    _save(fig, path)


def plot_bound(ks, bound_values, limit_values, path) -> None:
    """Residual bound vs update count, with its noise-free limit."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ks, bound_values, "-", label="noisy bound")
    ax.semilogy(ks, limit_values, "--", label="noise-free limit")
    ax.set_xlabel("updates k")
    ax.set_ylabel("residual bound")
    ax.legend()
    _save(fig, path)


def plot_n_bounds(ms, exact_values, taylor_values, path, bottou_values=None) -> None:
    """Update-count lower bounds vs batch size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ms, exact_values, "o-", label="exact inversion")
    ax.plot(ms, taylor_values, "s--", label="small-noise expansion")
    if bottou_values is not None:
        ax.plot(ms, bottou_values, "^:", label="classical inverted bound")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("mini-batch size M")
    ax.set_ylabel("update-count lower bound")
    ax.legend()
    _save(fig, path)
