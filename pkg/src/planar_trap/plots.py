"""Figure rendering for CLI reports.

Every report command saves a PNG next to its delimited/JSON artifact.
Rendering is deterministic (fixed dpi, no timestamps) so repeated runs
produce identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon as MplPolygon

from .geometry import Role, TrapLayout

__all__ = [
    "save_layout_figure",
    "save_characterize_figure",
    "save_map_figure",
    "save_crystal_figure",
    "save_compensation_figure",
    "save_stability_figure",
]

_DPI = 150
_ROLE_COLORS = {Role.RF: "#f4a6b8", Role.CONTROL: "#f2d25c", Role.GROUND: "#c9c9c9"}


def _draw_layout(ax, layout: TrapLayout, voltages=None):
    for e in layout.electrodes:
        color = _ROLE_COLORS[e.role]
        for p in e.polygons:
            ax.add_patch(MplPolygon(p.vertices, closed=True, facecolor=color,
                                    edgecolor="k", linewidth=0.4))
        b = e.bounds
        label = e.name
        if voltages and e.name in voltages:
            label += f"\n{voltages[e.name]:+.2f} V"
        ax.text((b[0] + b[2]) / 2, (b[1] + b[3]) / 2, label, fontsize=6,
                ha="center", va="center")
    b = layout.bounds
    pad = 0.08 * max(b[2] - b[0], b[3] - b[1])
    ax.set_xlim(b[0] - pad, b[2] + pad)
    ax.set_ylim(b[1] - pad, b[3] + pad)
    ax.set_aspect("equal")
    ax.set_xlabel("x (µm)")
    ax.set_ylabel("y (µm)")


def _save(fig, path):
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_layout_figure(path, layout: TrapLayout, title: str = "", voltages=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    _draw_layout(ax, layout, voltages)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)


def save_characterize_figure(path, layout: TrapLayout, report, voltages=None):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4),
                                   gridspec_kw={"width_ratios": [2, 1]})
    _draw_layout(ax1, layout, voltages)
    ax1.plot(report.minimum[0], report.minimum[1], "r+", markersize=10,
             label="ion (x, y)")
    ax1.legend(loc="upper right", fontsize=7)
    ax1.set_title("layout, plan view")

    ax2.axhline(report.ion_height, color="tab:red", label=f"ion height "
                f"{report.ion_height:.1f} µm")
    ax2.axhline(report.escape_point[2], color="tab:blue", linestyle="--",
                label=f"escape z {report.escape_point[2]:.1f} µm")
    ax2.set_ylim(0, max(2.2 * report.ion_height, 1.2 * report.escape_point[2]))
    ax2.set_ylabel("z (µm)")
    ax2.set_xticks([])
    ax2.set_title(f"depth {1e3 * report.depth:.0f} meV"
                  + (" (lower bound)" if report.depth_is_lower_bound else ""))
    ax2.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def save_map_figure(path, points, values, label: str):
    """Heat map when the grid is planar, line plot when 1D; skipped
    otherwise (returns False)."""
    pts = np.asarray(points)
    axes = [np.unique(pts[:, k]) for k in range(3)]
    sizes = [a.size for a in axes]
    varying = [k for k in range(3) if sizes[k] > 1]
    names = ["x (µm)", "y (µm)", "z (µm)"]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if len(varying) == 1:
        k = varying[0]
        order = np.argsort(pts[:, k])
        ax.plot(pts[order, k], np.asarray(values)[order])
        ax.set_xlabel(names[k])
        ax.set_ylabel(label)
    elif len(varying) == 2:
        a, b = varying
        grid = np.asarray(values).reshape(sizes[a], sizes[b]) if pts.shape[0] == \
            sizes[a] * sizes[b] else None
        if grid is None:
            plt.close(fig)
            return False
        pc = ax.pcolormesh(axes[b], axes[a], grid, shading="nearest")
        fig.colorbar(pc, ax=ax, label=label)
        ax.set_xlabel(names[b])
        ax.set_ylabel(names[a])
    else:
        plt.close(fig)
        return False
    fig.tight_layout()
    _save(fig, path)
    return True


def save_crystal_figure(path, chain, modes):
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 5))
    s = chain.positions
    ax1.plot(s, np.zeros_like(s), "o", color="tab:blue")
    ax1.set_yticks([])
    ax1.set_xlabel("axial position (µm)")
    ax1.set_title(f"{len(s)}-ion chain, length {s.max() - s.min():.2f} µm")
    ax2.stem(np.arange(1, modes.frequencies_hz.size + 1),
             modes.frequencies_hz / 1e3)
    ax2.set_xlabel("mode index")
    ax2.set_ylabel("frequency (kHz)")
    fig.tight_layout()
    _save(fig, path)


def save_compensation_figure(path, result):
    names = sorted(result.voltages.control)
    vals = [result.voltages.control[n] for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    colors = ["tab:orange" if n in result.electrodes else "tab:gray" for n in names]
    ax.bar(names, vals, color=colors)
    ax.set_ylabel("voltage (V)")
    ax.set_title(f"compensation solution (rank {result.rank}, "
                 f"null space {result.null_space_dim})")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    _save(fig, path)


def save_stability_figure(path, mathieu_q, mathieu_a, floquet_stable):
    from .mathieu import MATHIEU_Q_EDGE

    fig, ax = plt.subplots(figsize=(6, 4))
    qmax = max(1.2, 1.3 * np.max(np.abs(mathieu_q)))
    ax.axvline(MATHIEU_Q_EDGE, color="k", linestyle="--",
               label=f"|q| = {MATHIEU_Q_EDGE}")
    for i, (q, a, ok) in enumerate(zip(mathieu_q, mathieu_a, floquet_stable)):
        ax.plot(abs(q), a, "o" if ok else "x",
                color="tab:green" if ok else "tab:red", markersize=9)
        ax.annotate(f"axis {i}", (abs(q), a), textcoords="offset points",
                    xytext=(6, 4), fontsize=8)
    ax.set_xlim(0, qmax)
    ax.set_xlabel("|q|")
    ax.set_ylabel("a")
    ax.legend(fontsize=8)
    ax.set_title("operating points vs first stability region edge")
    fig.tight_layout()
    _save(fig, path)
