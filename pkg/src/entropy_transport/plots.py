"""Optional SVG figures.  Every figure is also fully described by a CSV."""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_entropy_density(n_A, S_A, path, spline=None, title=""):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.scatter(n_A, S_A, s=4, alpha=0.6, label="trajectory")
    if spline is not None:
        xs = np.linspace(*spline.domain, 400)
        ax.plot(xs, spline(xs), "k--", lw=1.2, label="cubic B-spline")
    ax.set_xlabel(r"$\langle n_A \rangle$")
    ax.set_ylabel(r"$S_A$")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_heatmap(cells, path):
    plt = _pyplot()
    Us = sorted({c.U for c in cells})
    hs = sorted({c.h for c in cells})
    grid = np.full((len(Us), len(hs)), np.nan)
    for c in cells:
        grid[Us.index(c.U), hs.index(c.h)] = c.r2
    fig, ax = plt.subplots(figsize=(4.5, 3.8))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(hs)), [f"{h:g}" for h in hs])
    ax.set_yticks(range(len(Us)), [f"{u:g}" for u in Us])
    ax.set_xlabel("h / J")
    ax.set_ylabel("U / J")
    fig.colorbar(im, ax=ax, label=r"$R^2$")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
