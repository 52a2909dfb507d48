"""Figures written next to the CSV outputs (matplotlib, non-interactive)."""

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_run(result, path):
    """One panel per state column of a run table, against x."""
    plt = _pyplot()
    names = result.columns[1:]
    fig, axes = plt.subplots(len(names), 1, figsize=(7, 1.8 * len(names)), sharex=True)
    axes = np.atleast_1d(axes)
    x = result.table[:, 0]
    for ax, k, name in zip(axes, range(1, len(result.columns)), names):
        ax.plot(x, result.table[:, k], lw=1.0, color="k")
        ax.set_ylabel(name)
        if result.config.scheme == "coupled-relaxed":
            ax.axvline(0.0, color="0.6", lw=0.8, ls="--")
    axes[-1].set_xlabel("x")
    cfg = result.config
    axes[0].set_title(f"{cfg.preset}, {cfg.scheme}, N={cfg.n_cells}, t={cfg.t_end:g}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_report(report, path):
    """Log-log error curves of an ErrorReport."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 4))
    x = np.asarray(report.values, dtype=float)
    for c, name in enumerate(report.components):
        ax.loglog(x, report.errors[:, c], "o-", label=name)
    # first-order guide through the first point
    guide = report.errors[0].max() * x / x[0]
    if report.label == "n_cells":
        guide = report.errors[0].max() * x[0] / x
    ax.loglog(x, guide, "k--", lw=0.8, label="order 1")
    ax.set_xlabel(report.label)
    ax.set_ylabel("error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
