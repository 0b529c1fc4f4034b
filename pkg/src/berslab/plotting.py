"""Optional PNG figures for the CSV tables written by the CLI."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (np.sqrt(5) - 1) / 2
FIG_WIDTH = 6.0

STYLE = {
    "font.size": 9,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "figure.dpi": 120,
    "savefig.bbox": "tight",
}

# table name -> (x column, y columns, log-scale y, x range)
LAYOUTS = {
    "geodesic": ("x", ("jac_t0", "jac_t0.5", "jac_t1", "eulerian_velocity_t0.5"), False, (-8, 8)),
    "schwarzian": ("x", ("schwarzian", "bers_potential", "lp_schwarzian_p2", "score_curvature"), False, (-8, 8)),
    "cocycle": ("pair", ("bott", "bott_thurston_p2"), False, None),
    "bers": ("x", ("potential", "distinguished_solution", "reconstructed_jac", "miura_variable"), False, (-8, 8)),
    "scatter": ("k", ("abs_R",), True, None),
    "trace": ("kappa", ("log_a_remainder",), True, None),
    "diagnose": ("x", ("density", "score", "beta"), False, (-8, 8)),
    "criticality": ("radius", ("energy_times_radius", "norm_ratio"), False, None),
    "noncontrol": ("lambda", ("beta_plus_integral", "plateau_zero_count"), True, None),
}


def figure_size(scale: float = 1.0) -> tuple[float, float]:
    return FIG_WIDTH * scale, FIG_WIDTH * scale * GOLDEN


def plot_table(name: str, header, rows: np.ndarray, path: Path) -> Path:
    """Render one table with its registered layout; unknown tables plot every column."""
    header = list(header)
    xcol, ycols, logy, xlim = LAYOUTS.get(name, (header[0], tuple(header[1:]), False, None))
    x = rows[:, header.index(xcol)]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=figure_size())
        for col in ycols:
            y = rows[:, header.index(col)]
            if logy:
                ax.semilogy(x, np.abs(y), label=col, marker="." if len(x) < 50 else None)
            else:
                ax.plot(x, y, label=col, marker="." if len(x) < 50 else None)
        if xlim is not None:
            ax.set_xlim(*xlim)
        ax.set_xlabel(xcol)
        ax.set_title(name)
        ax.legend()
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
    return path
