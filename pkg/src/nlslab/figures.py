"""Report figures rendered to files next to the delimited output.

All rendering uses the Agg backend; nothing here opens a window.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import threading

import matplotlib.pyplot as plt
import numpy as np

from .propagation import TrajectoryRecord

# pyplot and the mathtext parser are not thread-safe; sweep renders from
# worker threads, so all figure writing is serialized
_RENDER_LOCK = threading.Lock()


def _density_panel(ax, u, title):
    grid = u.grid
    rho = np.real(u.rho)
    if grid.n == 1:
        ax.plot(np.asarray(grid.x[0]).ravel(), rho)
        ax.set_xlabel("x")
        ax.set_ylabel(r"$|u|^2$")
    else:
        sl = rho if grid.n == 2 else rho[:, :, rho.shape[2] // 2]
        ax.imshow(sl.T, origin="lower", aspect="auto",
                  extent=[-grid.L, grid.L, -grid.L, grid.L])
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    ax.set_title(title)


def simulate_figure(traj: TrajectoryRecord, path: str) -> None:
    """Initial/final density and conserved-quantity drift."""
    with _RENDER_LOCK:
        fig, axes = plt.subplots(1, 3, figsize=(12, 3.5))
        _density_panel(axes[0], traj.snapshots[0], f"t = {traj.times[0]:g}")
        _density_panel(axes[1], traj.snapshots[-1], f"t = {traj.times[-1]:g}")

        times = np.asarray(traj.times)
        masses = np.array([o.get("mass", np.nan) for o in traj.observations])
        energies = np.array([o.get("energy", np.nan) for o in traj.observations])
        ax = axes[2]
        ax.plot(times, masses - masses[0], label="mass drift")
        ax.plot(times, energies - energies[0], label="energy drift")
        ax.set_xlabel("t")
        ax.legend(fontsize=8)
        ax.set_title("conservation drift")
        fig.tight_layout()
        fig.savefig(path, dpi=130)
        plt.close(fig)


def diagnose_figure(report, path: str) -> None:
    """Morawetz series: J and M, then the rate decomposition."""
    with _RENDER_LOCK:
        t = np.array([s.t for s in report.samples])
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
        axes[0].plot(t, [s.J for s in report.samples], label="J")
        axes[0].plot(t, [s.M for s in report.samples], label="M")
        axes[0].set_xlabel("t")
        axes[0].legend(fontsize=8)
        axes[0].set_title("Morawetz quantities")
        axes[1].plot(t, [s.K for s in report.samples], label="K")
        axes[1].plot(t, [s.Ppot for s in report.samples], label="P")
        axes[1].plot(t, [s.R for s in report.samples], label="R")
        axes[1].plot(t, [s.rate for s in report.samples], "k--", label="rate")
        axes[1].set_xlabel("t")
        axes[1].legend(fontsize=8)
        axes[1].set_title("rate decomposition")
        fig.tight_layout()
        fig.savefig(path, dpi=130)
        plt.close(fig)


def scatter_figure(report, path: str) -> None:
    """Interaction-picture distance to the final state."""
    with _RENDER_LOCK:
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        t = np.asarray(report.times)
        d = np.asarray(report.distances_to_final)
        pos = d > 0
        if pos.any():
            ax.semilogy(t[pos], d[pos], ".-")
        ax.axvline(t[-1] / 2.0, color="gray", lw=0.8, ls=":")
        ax.set_xlabel("t")
        ax.set_ylabel(r"$\|v(t) - u_+;\,H^1\|$")
        ax.set_title(f"verdict: {report.verdict} (tail sup = {report.tail_sup:.2e})")
        fig.tight_layout()
        fig.savefig(path, dpi=130)
        plt.close(fig)
