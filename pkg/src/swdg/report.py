"""Report rendering: figures saved next to the delimited outputs.

Uses the Agg backend so reports render identically with or without a
display.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri    # noqa: E402
import numpy as np               # noqa: E402


def render_field_figure(mesh, tables, state, path, title="surface elevation"):
    """Flat-shaded elevation means on the triangulation."""
    tri = mtri.Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1],
                             mesh.elements)
    xi = state.c[:, 0, 0] * tables.phi1
    fig, ax = plt.subplots(figsize=(6, 5))
    pc = ax.tripcolor(tri, facecolors=xi, cmap="viridis")
    fig.colorbar(pc, ax=ax, label="xi mean (m)")
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_title(title)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def render_timing_figure(rows, path, title="per-kernel mean times"):
    """Grouped bar chart of kernel means per lane."""
    kernels = []
    for r in rows:
        if r.kernel not in kernels:
            kernels.append(r.kernel)
    lanes = sorted({r.lane for r in rows})
    means = {lane: [next((r.mean_ms for r in rows
                          if r.kernel == k and r.lane == lane), 0.0)
                    for k in kernels]
             for lane in lanes}
    x = np.arange(len(kernels))
    width = 0.8 / max(len(lanes), 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    for i, lane in enumerate(lanes):
        ax.bar(x + i * width, means[lane], width, label=f"lane {lane}")
    ax.set_xticks(x + width * (len(lanes) - 1) / 2)
    ax.set_xticklabels(kernels, rotation=30, ha="right")
    ax.set_ylabel("mean time (ms)")
    ax.set_title(title)
    ax.legend()
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
