"""Matplotlib figure: colored layout next to a per-bin density-uniformity map."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402

from .svg import MASK_FILLS  # noqa: E402

params = {
    "font.family": "sans-serif",
    "font.size": 8,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "figure.figsize": [7.0, 3.2],
    "figure.dpi": 150,
    "savefig.bbox": "tight",
    "image.cmap": "magma",
}


def du_grid(grid, du_per_bin):
    """(ny, nx) array of log10 DU, NaN for bins without any density."""
    out = np.full((max(grid.ny, 1), max(grid.nx, 1)), np.nan)
    for k, v in du_per_bin:
        iy, ix = divmod(k, grid.nx)
        out[iy, ix] = np.log10(v)
    return out


def render_figure(result, path):
    g, coloring, grid = result.graph, result.coloring, result.grid
    with matplotlib.rc_context(params):
        fig, (ax0, ax1) = plt.subplots(1, 2)
        for k in sorted(g.fragments):
            f = g.fragments[k]
            for r in f.rects:
                ax0.add_patch(Rectangle((r.x0, r.y0), r.width, r.height, facecolor=MASK_FILLS[coloring[k]],
                                        edgecolor="none"))
        rects = [r for f in g.fragments.values() for r in f.rects]
        if rects:
            ax0.set_xlim(min(r.x0 for r in rects), max(r.x1 for r in rects))
            ax0.set_ylim(min(r.y0 for r in rects), max(r.y1 for r in rects))
        ax0.set_aspect("equal")
        rep = result.report
        ax0.set_title(f"conflicts {rep.conflicts}, stitches {rep.stitches}")
        ax0.set_xlabel("x (nm)")
        ax0.set_ylabel("y (nm)")

        im = ax1.imshow(du_grid(grid, rep.du_per_bin), origin="lower", interpolation="nearest")
        ax1.set_title(f"log10 DU per bin (sum {rep.du_sum:.3g})")
        ax1.set_xlabel("bin column")
        ax1.set_ylabel("bin row")
        fig.colorbar(im, ax=ax1, shrink=0.8)
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
