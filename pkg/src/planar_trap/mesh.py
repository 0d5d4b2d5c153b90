"""Panel discretization of a trap layout for the boundary-element solver.

Electrode polygons are decomposed exactly into axis-aligned rectangles
(rectilinear polygons; non-rectilinear ones fall back to an inner raster
cover).  The grounded remainder of the plane is meshed explicitly out to
a configurable margin (default 10x the transverse extent of the
electrodes) with panel sizes growing linearly with distance from the
electrode region; beyond the margin the plane is truncated.

Panels within ``2 * layout.min_gap`` of any electrode edge are refined to
``max_panel / edge_grading`` to resolve the charge-density concentration
at conductor discontinuities.  Panel "diameter" means the rectangle
diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidParams, NoElectrodes
from .geometry import Polygon, Role, TrapLayout

__all__ = ["Panel", "PanelMesh", "mesh_layout", "GROUND"]

GROUND = -1  # owner index of grounded-plane panels


@dataclass(frozen=True)
class Panel:
    """One rectangular charge panel at z = 0 (µm)."""

    x0: float
    y0: float
    x1: float
    y1: float
    owner: str | None   # electrode name, None for the grounded plane

    @property
    def corners(self) -> np.ndarray:
        return np.array([[self.x0, self.y0], [self.x1, self.y0],
                         [self.x1, self.y1], [self.x0, self.y1]])

    @property
    def centroid(self) -> np.ndarray:
        return np.array([(self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0])

    @property
    def area(self) -> float:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.x1 - self.x0, self.y1 - self.y0))


@dataclass(frozen=True)
class PanelMesh:
    """All panels of a meshed layout, grouped by owning electrode.

    ``bounds`` is (N, 4) ``[x0, y0, x1, y1]`` in µm, ``owner`` an (N,)
    int array indexing ``names`` with ``GROUND`` (-1) marking grounded
    plane panels.  Panels are sorted by owner so each electrode occupies
    one contiguous slice.
    """

    bounds: np.ndarray
    owner: np.ndarray
    names: tuple[str, ...]
    roles: tuple[Role, ...]

    def __post_init__(self):
        b = np.ascontiguousarray(self.bounds, dtype=float)
        o = np.ascontiguousarray(self.owner, dtype=int)
        b.flags.writeable = False
        o.flags.writeable = False
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "owner", o)

    def __len__(self):
        return self.bounds.shape[0]

    @cached_property
    def centroids(self) -> np.ndarray:
        b = self.bounds
        return np.column_stack([(b[:, 0] + b[:, 2]) / 2.0,
                                (b[:, 1] + b[:, 3]) / 2.0])

    @cached_property
    def areas(self) -> np.ndarray:
        b = self.bounds
        return (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])

    @cached_property
    def diameters(self) -> np.ndarray:
        b = self.bounds
        return np.hypot(b[:, 2] - b[:, 0], b[:, 3] - b[:, 1])

    @cached_property
    def ranges(self) -> dict[str, slice]:
        out = {}
        for k, name in enumerate(self.names):
            idx = np.nonzero(self.owner == k)[0]
            out[name] = slice(int(idx[0]), int(idx[-1]) + 1) if idx.size else slice(0, 0)
        return out

    @property
    def ground_slice(self) -> slice:
        idx = np.nonzero(self.owner == GROUND)[0]
        return slice(int(idx[0]), int(idx[-1]) + 1) if idx.size else slice(0, 0)

    def panels(self):
        for k in range(len(self)):
            o = int(self.owner[k])
            yield Panel(*self.bounds[k], self.names[o] if o >= 0 else None)

    def electrode_indicator(self, name: str) -> np.ndarray:
        """1.0 on the named electrode's panels, 0.0 elsewhere."""
        k = self.names.index(name)
        return (self.owner == k).astype(float)


# --------------------------------------------------------------------------
# Rectilinear decomposition
# --------------------------------------------------------------------------

def _scanline_rects(polys: list[Polygon]) -> np.ndarray:
    """Exact disjoint rectangle cover of a union of rectilinear polygons."""
    ys = np.unique(np.concatenate([p.vertices[:, 1] for p in polys]))
    edges = []
    for p in polys:
        v = p.vertices
        w = np.roll(v, -1, axis=0)
        vert = np.abs(v[:, 0] - w[:, 0]) == 0.0
        edges.append(np.column_stack([v[vert, 0], v[vert, 1], w[vert, 1]]))
    edges = np.vstack(edges)  # (E, 3): x, ya, yb
    elo = np.minimum(edges[:, 1], edges[:, 2])
    ehi = np.maximum(edges[:, 1], edges[:, 2])
    rects = []
    for y0, y1 in zip(ys[:-1], ys[1:]):
        ym = 0.5 * (y0 + y1)
        xs = np.sort(edges[(elo < ym) & (ehi > ym), 0])
        for x0, x1 in zip(xs[0::2], xs[1::2]):
            rects.append((x0, y0, x1, y1))
    return np.asarray(rects, dtype=float).reshape(-1, 4)


def _raster_rects(poly: Polygon, cell: float) -> np.ndarray:
    """Inner raster cover of a non-rectilinear polygon (approximate)."""
    b = poly.bounds
    nx = max(1, int(np.ceil((b[2] - b[0]) / cell)))
    ny = max(1, int(np.ceil((b[3] - b[1]) / cell)))
    xs = np.linspace(b[0], b[2], nx + 1)
    ys = np.linspace(b[1], b[3], ny + 1)
    out = []
    for x0, x1 in zip(xs[:-1], xs[1:]):
        for y0, y1 in zip(ys[:-1], ys[1:]):
            pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1),
                   ((x0 + x1) / 2, (y0 + y1) / 2)]
            if all(poly.contains(x, y) for x, y in pts):
                out.append((x0, y0, x1, y1))
    return np.asarray(out, dtype=float).reshape(-1, 4)


def _complement_rects(covered: np.ndarray, box: tuple) -> np.ndarray:
    """Rectangles filling box minus the union of ``covered`` rectangles."""
    bx0, by0, bx1, by1 = box
    ys = np.unique(np.concatenate([covered[:, 1], covered[:, 3], [by0, by1]]))
    ys = ys[(ys >= by0) & (ys <= by1)]
    out = []
    for y0, y1 in zip(ys[:-1], ys[1:]):
        ym = 0.5 * (y0 + y1)
        rows = covered[(covered[:, 1] < ym) & (covered[:, 3] > ym)]
        xs = np.sort(np.concatenate([rows[:, 0], rows[:, 2]]))
        xs = np.clip(xs, bx0, bx1)
        borders = np.concatenate([[bx0], xs, [bx1]])
        for x0, x1 in zip(borders[0::2], borders[1::2]):
            if x1 - x0 > 1e-12:
                out.append((x0, y0, x1, y1))
    return np.asarray(out, dtype=float).reshape(-1, 4)


# --------------------------------------------------------------------------
# Grading / subdivision
# --------------------------------------------------------------------------

def _outline_segments(layout: TrapLayout) -> np.ndarray:
    """Outlines of driven (non-ground) electrodes: the charge density is
    singular only where the surface potential can jump."""
    segs = []
    for e in layout.electrodes:
        if e.role is Role.GROUND:
            continue
        for p in e.polygons:
            v = p.vertices
            w = np.roll(v, -1, axis=0)
            segs.append(np.column_stack([v, w]))
    if not segs:
        return np.zeros((0, 4))
    return np.vstack(segs)  # (S, 4): ax, ay, bx, by


def _rect_to_segments_dist(rect, segs) -> float:
    """Distance from an axis-aligned rectangle to the nearest segment.

    Valid for segments that do not cross the rectangle interior, which
    holds for electrode outlines against scanline-aligned mesh cells.
    """
    x0, y0, x1, y1 = rect
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    # endpoint-to-box distances
    dxa = np.maximum(np.maximum(x0 - ax, ax - x1), 0.0)
    dya = np.maximum(np.maximum(y0 - ay, ay - y1), 0.0)
    dxb = np.maximum(np.maximum(x0 - bx, bx - x1), 0.0)
    dyb = np.maximum(np.maximum(y0 - by, by - y1), 0.0)
    d = np.minimum(np.hypot(dxa, dya), np.hypot(dxb, dyb))
    # corner-to-segment distances
    ex, ey = bx - ax, by - ay
    L2 = ex * ex + ey * ey
    L2 = np.where(L2 > 0.0, L2, 1.0)
    for cx, cy in ((x0, y0), (x1, y0), (x1, y1), (x0, y1)):
        t = np.clip(((cx - ax) * ex + (cy - ay) * ey) / L2, 0.0, 1.0)
        d = np.minimum(d, np.hypot(ax + t * ex - cx, ay + t * ey - cy))
    return float(d.min())


def _subdivide(rects: np.ndarray, allowed) -> list[tuple]:
    out = []
    stack = [tuple(r) for r in rects]
    while stack:
        r = stack.pop()
        x0, y0, x1, y1 = r
        w, h = x1 - x0, y1 - y0
        if np.hypot(w, h) <= allowed(r):
            out.append(r)
        elif w >= h:
            xm = 0.5 * (x0 + x1)
            stack.append((x0, y0, xm, y1))
            stack.append((xm, y0, x1, y1))
        else:
            ym = 0.5 * (y0 + y1)
            stack.append((x0, y0, x1, ym))
            stack.append((x0, ym, x1, y1))
    return out


def mesh_layout(layout: TrapLayout, max_panel: float, edge_grading: float,
                ground_margin_factor: float = 10.0,
                ground_growth: float = 0.5) -> PanelMesh:
    """Discretize a layout (electrodes + grounded plane) into panels.

    Parameters
    ----------
    layout : TrapLayout
    max_panel : float
        Maximum electrode panel diameter (diagonal), µm.
    edge_grading : float
        Refinement factor near electrode edges: panels within
        ``2 * layout.min_gap`` of an edge get diameter
        ``<= max_panel / edge_grading``.
    ground_margin_factor : float
        The grounded plane is meshed out to this multiple of the
        transverse electrode extent beyond the electrode bounding box.
    ground_growth : float
        Ground panel diameter may grow like ``ground_growth * distance``
        from the electrode region (coarse grading).
    """
    if not layout.electrodes:
        raise NoElectrodes("layout has no electrodes to mesh")
    if max_panel <= 0.0:
        raise InvalidParams("max_panel must be > 0")
    if edge_grading < 1.0:
        raise InvalidParams("edge_grading must be >= 1")

    fine = max_panel / edge_grading
    band = 2.0 * layout.min_gap
    segs = _outline_segments(layout)
    driven = [e for e in layout.electrodes if e.role is not Role.GROUND]
    core = (np.array([e.bounds for e in driven]).reshape(-1, 4) if driven
            else layout.bounds.reshape(1, 4))
    core = np.array([core[:, 0].min(), core[:, 1].min(),
                     core[:, 2].max(), core[:, 3].max()])

    def allowed_electrode(rect):
        if band > 0.0 and segs.size and _rect_to_segments_dist(rect, segs) < band:
            return fine
        return max_panel

    def allowed_ground(rect):
        # grounded area: refine near driven edges, grow with distance
        if band > 0.0 and segs.size and _rect_to_segments_dist(rect, segs) < band:
            return fine
        cx = 0.5 * (rect[0] + rect[2])
        cy = 0.5 * (rect[1] + rect[3])
        d = np.hypot(max(core[0] - cx, cx - core[2], 0.0),
                     max(core[1] - cy, cy - core[3], 0.0))
        return max(max_panel, ground_growth * d)

    bounds_list = []
    owner_list = []
    covered = []
    for k, e in enumerate(layout.electrodes):
        rl = [p for p in e.polygons if p.is_rectilinear()]
        other = [p for p in e.polygons if not p.is_rectilinear()]
        base = []
        if rl:
            base.append(_scanline_rects(rl))
        for p in other:
            base.append(_raster_rects(p, fine))
        base = np.vstack([b for b in base if b.size]) if base else np.zeros((0, 4))
        covered.append(base)
        rule = allowed_ground if e.role is Role.GROUND else allowed_electrode
        cells = _subdivide(base, rule)
        bounds_list.extend(cells)
        owner_list.extend([k] * len(cells))

    if layout.ground_plane:
        extent = max(core[3] - core[1], 1e-9)
        margin = ground_margin_factor * extent
        lb = layout.bounds
        box = (min(core[0], lb[0]) - margin, min(core[1], lb[1]) - margin,
               max(core[2], lb[2]) + margin, max(core[3], lb[3]) + margin)
        covered_all = np.vstack([c for c in covered if c.size]) if covered else np.zeros((0, 4))
        gnd = _complement_rects(covered_all, box)
        cells = _subdivide(gnd, allowed_ground)
        bounds_list.extend(cells)
        owner_list.extend([GROUND] * len(cells))

    bounds = np.asarray(bounds_list, dtype=float).reshape(-1, 4)
    owner = np.asarray(owner_list, dtype=int)
    # deterministic order: by owner (ground last) then position
    key = np.where(owner == GROUND, len(layout.electrodes), owner)
    order = np.lexsort((bounds[:, 0], bounds[:, 1], key))
    return PanelMesh(bounds[order], owner[order], layout.names,
                     tuple(e.role for e in layout.electrodes))
