"""Figure rendering for the report path (PNG files next to the CSV)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import laws
from .harness import ConvergenceRow


def save_convergence_figure(rows: list[ConvergenceRow], p: int, kind: str, path) -> None:
    """Scaled moments with error bars against the analytic limit."""
    params = [r.param for r in rows]
    means = [r.scaled_moment for r in rows]
    errs = [r.std_error for r in rows]
    gaps = [r.abs_gap for r in rows]
    limit = rows[0].limit_value

    fig, (ax, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax.errorbar(params, means, yerr=[3 * e for e in errs], fmt="o-", capsize=3,
                label="scaled moment (3 SE)")
    ax.axhline(limit, color="k", ls="--", lw=1, label="limit")
    ax.set_xscale("log")
    ax.set_xlabel("radius" if kind == "exit_converge" else "horizon")
    ax.set_ylabel(f"scaled moment (p={p})")
    ax.legend(frameon=False, fontsize=8)

    ax2.loglog(params, gaps, "s-")
    ax2.set_xlabel(ax.get_xlabel())
    ax2.set_ylabel("|scaled moment - limit|")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_limits_figure(dim: int, path, series: laws.SeriesConfig | None = None) -> None:
    """Overview panels: both series of H, the limit CDFs, the transforms."""
    series = series or laws.SeriesConfig()
    fig, axes = plt.subplots(2, 2, figsize=(9, 7))

    y = np.logspace(-2, 1, 200)
    axes[0, 0].semilogx(y, laws.h_reflection(y, series), label="reflection form")
    axes[0, 0].semilogx(y, laws.h_theta(y, series), "--", label="theta form")
    axes[0, 0].axvline(series.crossover_y, color="gray", lw=0.8)
    axes[0, 0].set_xlabel("y")
    axes[0, 0].set_ylabel("H(y)")
    axes[0, 0].legend(frameon=False, fontsize=8)

    t = np.logspace(-2, 1.5, 200)
    for n in range(1, min(dim, 5) + 1):
        axes[0, 1].semilogx(t, laws.exit_cdf(n, t, series), label=f"dim {n}")
    axes[0, 1].set_xlabel("t")
    axes[0, 1].set_ylabel("exit-time limit CDF")
    axes[0, 1].legend(frameon=False, fontsize=8)

    x = np.logspace(-1, 1, 200)
    for n in range(1, min(dim, 5) + 1):
        axes[1, 0].semilogx(x, laws.max_cdf(n, x, series), label=f"dim {n}")
    axes[1, 0].set_xlabel("x")
    axes[1, 0].set_ylabel("running-max limit CDF")
    axes[1, 0].legend(frameon=False, fontsize=8)

    theta = np.logspace(-1.5, 1, 200)
    axes[1, 1].semilogx(theta, [laws.laplace_exit(v) for v in theta], label="two-sided")
    axes[1, 1].semilogx(theta, [laws.laplace_passage(v) for v in theta], "--",
                        label="one-sided")
    axes[1, 1].set_xlabel("theta")
    axes[1, 1].set_ylabel("Laplace transform")
    axes[1, 1].legend(frameon=False, fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
