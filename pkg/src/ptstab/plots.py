"""Static four-panel figure of a trajectory: |x|(t), u(t), r(tau), theta_hat(tau)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_trajectory(traj, path, title=""):
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))
    ax = axes[0, 0]
    xn = traj.x_norm
    if np.all(xn > 0):
        ax.semilogy(traj.t, xn)
    else:
        ax.plot(traj.t, xn)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|x|")

    ax = axes[0, 1]
    ax.plot(traj.t, traj.u, lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("u")

    ax = axes[1, 0]
    ax.semilogy(traj.tau, traj.r, label="r")
    ax.semilogy(traj.tau, traj.alpha, "--", lw=0.8, label="alpha")
    ax.set_xlabel("tau")
    ax.set_ylabel("r")
    ax.legend()

    ax = axes[1, 1]
    ax.semilogy(traj.tau, traj.theta_hat, label="theta_hat")
    ax.semilogy(traj.tau, traj.alpha, "--", lw=0.8, label="alpha")
    ax.set_xlabel("tau")
    ax.set_ylabel("theta_hat")
    ax.legend()

    for a in axes.flat:
        a.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
