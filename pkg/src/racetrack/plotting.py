"""Static figures written next to the CSV output (Agg backend, no display)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import Normalize, TwoSlopeNorm  # noqa: E402

FIGSIZE = (6.4, 4.0)


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_solution(nodes, lam, omega, lambda_bar, path, title=None):
    """Stationary density and real wage side by side."""
    fig, (ax_l, ax_w) = plt.subplots(1, 2, figsize=(10, 3.6))
    ax_l.plot(nodes, lam, color="tab:blue", lw=1.2)
    ax_l.axhline(lambda_bar, color="0.5", lw=0.8, ls="--")
    ax_l.set_xlabel("r")
    ax_l.set_ylabel(r"$\lambda^*$")
    ax_w.plot(nodes, omega, color="tab:red", lw=1.2)
    ax_w.set_xlabel("r")
    ax_w.set_ylabel(r"$\omega^*$")
    for ax in (ax_l, ax_w):
        ax.set_xlim(-np.pi, np.pi)
        ax.ticklabel_format(axis="y", useOffset=False)
    if title:
        fig.suptitle(title)
    return _finish(fig, path)


def plot_heatmap(tau_grid, sigma_grid, gamma, path, title=None):
    """Diverging map of the growth rate with its zero contour."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    finite = gamma[np.isfinite(gamma)]
    mixed = finite.size and finite.min() < 0 < finite.max()
    if mixed:
        # separate slopes so a weak unstable band stays visible next to strong damping
        norm = TwoSlopeNorm(0.0, finite.min(), finite.max())
    else:
        vmax = np.max(np.abs(finite)) if finite.size else 1.0
        norm = Normalize(-vmax, vmax)
    mesh = ax.pcolormesh(tau_grid, sigma_grid, gamma, cmap="RdBu_r", norm=norm, shading="nearest")
    if mixed:
        ax.contour(tau_grid, sigma_grid, gamma, levels=[0.0], colors="k", linewidths=1.0)
    fig.colorbar(mesh, ax=ax, label=r"$\Gamma_k$")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\sigma$")
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def plot_critical(rows, path, title=None):
    """Critical points ``(tau_root, sigma)`` coloured by mode."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    by_k = {}
    for row in rows:
        by_k.setdefault(row["k"], []).append((row["tau_root"], row["sigma"]))
    for k in sorted(by_k):
        pts = np.array(by_k[k])
        ax.plot(pts[:, 0], pts[:, 1], ".", ms=3, label=f"k={k}")
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$\sigma$")
    if by_k:
        ax.legend(fontsize=8, markerscale=3)
    if title:
        ax.set_title(title)
    return _finish(fig, path)


def plot_sweep(summary_max, path, title=None):
    """Maximum urban-area count over seeds for each swept parameter pair."""
    fig, ax = plt.subplots(figsize=FIGSIZE)
    labels = [f"({s:g}, {t:g})" for s, t, _ in summary_max]
    counts = [c for _, _, c in summary_max]
    ax.bar(range(len(counts)), counts, color="tab:blue")
    ax.set_xticks(range(len(counts)))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_xlabel(r"$(\sigma, \tau)$")
    ax.set_ylabel("max urban areas")
    if title:
        ax.set_title(title)
    return _finish(fig, path)
