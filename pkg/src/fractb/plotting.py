"""Figure rendering for the CLI report commands.

Figures are drawn on standalone ``matplotlib.figure.Figure`` objects (no
pyplot state), so rendering is safe from worker threads and never opens a
window.
"""

from __future__ import annotations

import os
from pathlib import Path

from matplotlib.figure import Figure

STYLE = {
    "figsize": (6.4, 4.0),
    "dpi": 120,
}
LINESTYLES = ("-", "--", ":", "-.")


def _new(nrows=1, ncols=1, scale=1.0):
    w, h = STYLE["figsize"]
    fig = Figure(figsize=(w * ncols * scale, h * nrows * scale), dpi=STYLE["dpi"])
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig, path):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    fig.tight_layout()
    fig.savefig(tmp, format=path.suffix.lstrip(".") or "png")
    os.replace(tmp, path)
    return path


def _alpha_label(alpha):
    return rf"$\alpha = {alpha:g}$"


def plot_trajectory(traj, path, title=None):
    fig, axes = _new(2, 2, scale=0.7)
    for ax, name in zip(axes.flat, "SLIT"):
        ax.plot(traj.t, getattr(traj, name), color="k")
        ax.set_xlabel("t (years)")
        ax.set_ylabel(name)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_perturbation(result, path):
    fig, axes = _new()
    ax = axes[0, 0]
    t = result.baseline_I.t
    ax.plot(t, result.baseline_I.values, "k-", label="baseline")
    ax.plot(t, result.perturbed_I.values, "r--",
            label=f"{result.param_name} {result.pct_change:+g}%")
    ax.set_xlabel("t (years)")
    ax.set_ylabel("infectious I(t)")
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_states_by_alpha(trajectories, path):
    """2x2 panel of S, L, I, T with one curve per fractional order."""
    fig, axes = _new(2, 2, scale=0.7)
    titles = {"S": "Susceptible", "L": "Latent", "I": "Infectious", "T": "Treated"}
    for ax, name in zip(axes.flat, "SLIT"):
        for n, (alpha, traj) in enumerate(sorted(trajectories.items(), reverse=True)):
            ax.plot(traj.t, getattr(traj, name), LINESTYLES[n % 4], label=_alpha_label(alpha))
        ax.set_title(titles[name])
        ax.set_xlabel("t (years)")
    axes[0, 0].legend(frameon=False)
    return _save(fig, path)


def plot_control_efficacy(controls, efficacies, path):
    fig, axes = _new(1, 2, scale=0.75)
    for n, alpha in enumerate(sorted(controls, reverse=True)):
        ls = LINESTYLES[n % 4]
        u, F = controls[alpha], efficacies[alpha]
        axes[0, 0].plot(u.t, u.values, ls, label=_alpha_label(alpha))
        axes[0, 1].plot(F.t, F.values, ls, label=_alpha_label(alpha))
    axes[0, 0].set_ylabel("u(t)")
    axes[0, 1].set_ylabel("F(t)")
    for ax in axes.flat:
        ax.set_xlabel("t (years)")
    axes[0, 0].legend(frameon=False)
    return _save(fig, path)


def plot_weight_sweep(rows, path):
    """Cost functional and effectiveness against the control weight."""
    fig, axes = _new(1, 2, scale=0.75)
    alphas = sorted({r.alpha for r in rows}, reverse=True)
    for n, alpha in enumerate(alphas):
        sel = [r for r in rows if r.alpha == alpha]
        B = [r.B for r in sel]
        ls = LINESTYLES[n % 4] + "o"
        axes[0, 0].plot(B, [r.J for r in sel], ls, ms=3, label=_alpha_label(alpha))
        axes[0, 1].plot(B, [r.Fbar for r in sel], ls, ms=3, label=_alpha_label(alpha))
    axes[0, 0].set_ylabel("J")
    axes[0, 1].set_ylabel(r"$\bar F$")
    for ax in axes.flat:
        ax.set_xlabel("B")
    axes[0, 0].legend(frameon=False)
    return _save(fig, path)


def plot_sensitivity(table, path):
    fig, axes = _new()
    ax = axes[0, 0]
    names = [s.param_name for s in table]
    ax.barh(names, [s.index for s in table], color="0.4")
    ax.axvline(0.0, color="k", lw=0.8)
    ax.invert_yaxis()
    ax.set_xlabel("normalized sensitivity index of R0")
    return _save(fig, path)
