"""SVG chart rendering for benchmark reports.

Figures go through matplotlib's SVG backend with a pinned hash salt, text
kept as <text> elements, and no date metadata, so identical data produces
identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "molalab"
plt.rcParams["svg.fonttype"] = "none"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def plot_distance_curves(
    path: str,
    series: list[tuple[str, "np.ndarray", "np.ndarray"]],
    xlabel: str,
    title: str,
) -> None:
    """Log-scale distance curves, one line per (label, x, y) triple."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, x, y in series:
        ax.plot(x, y, label=label, linewidth=1.4)
    ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("distance to equilibrium")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_sweep(
    path: str,
    betas: "np.ndarray",
    values: "np.ndarray",
    ylabel: str,
    logy: bool = False,
) -> None:
    """Selected-parameter trend against the rotation factor."""
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    ax.plot(betas, values, marker="o", linewidth=1.4)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("rotation factor")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
