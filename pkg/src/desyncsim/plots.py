"""Figure rendering for the CLI report path.

Every report command writes its figures next to the CSV output: timer
traces with the distance panel for single runs, overlaid distance curves
for batches, and the normalised convergence-time curves for the bound
sweep.  Rendering is headless (Agg backend).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def plot_arc(arc, v: np.ndarray, path, threshold: float) -> None:
    """Timer traces and the distance to the desynchronization set over time."""
    fig, (ax_tau, ax_v) = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    for i in range(arc.n_oscillators):
        ax_tau.plot(arc.t, arc.states[:, i], lw=1.0, label=f"tau_{i + 1}")
    ax_tau.axhline(threshold, color="k", lw=0.6, ls="--")
    ax_tau.set_ylabel("timers")
    if arc.n_oscillators <= 6:
        ax_tau.legend(loc="upper right", fontsize=8, ncol=2)
    ax_v.plot(arc.t, v, color="tab:red", lw=1.2)
    ax_v.set_xlabel("t [seconds]")
    ax_v.set_ylabel("distance to set")
    ax_v.set_ylim(bottom=0.0)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_batch(curves: list[tuple[np.ndarray, np.ndarray]], path, limit: float | None = None) -> None:
    """Overlay the distance curves of a batch, with the bound when known."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for t, v in curves:
        ax.plot(t, v, lw=0.9, alpha=0.8)
    if limit is not None:
        ax.axhline(limit, color="k", lw=1.0, ls="--", label=f"bound = {limit:.4g}")
        ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("t [seconds]")
    ax.set_ylabel("distance to set")
    ax.set_ylim(bottom=0.0)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def plot_convergence_sweep(
    eps_values: np.ndarray, curves: dict[float, np.ndarray], path
) -> None:
    """Normalised time-to-converge versus coupling, one curve per target level."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for c1, values in sorted(curves.items()):
        ax.plot(eps_values, values, marker=".", ms=3, lw=1.0, label=f"c1 = {c1:g}")
    ax.set_xlabel("coupling")
    ax.set_ylabel("time bound / (threshold/rate + 1)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
