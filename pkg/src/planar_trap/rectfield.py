"""Closed-form fields of axis-aligned rectangles in the z = 0 plane.

Two families of solutions, both with analytic gradients and Hessians:

* ``solid_angle_*`` — potential above a grounded plane in which one
  rectangle is held at 1 V.  The potential equals the rectangle's
  subtended solid angle over 2*pi (a sum of four corner arctangents).
  Superposing these per electrode is the classic gapless-plane
  approximation for layouts whose gaps are small against the ion height.

* ``charge_*`` — potential of a uniformly charged rectangle (the
  single-layer kernel used by the boundary-element solver).  The double
  integral of 1/r has the antiderivative
  ``F = u*ln(v+R) + v*ln(u+R) - z*atan(u*v/(z*R))`` evaluated with
  alternating signs at the four corners.

Geometry is passed in micrometers; returned potentials are in volts (per
volt of electrode, or per C/m^2 of charge density times 1/(4 pi eps0)),
fields in V/m and curvatures in V/m^2.  Raw ``*_combined`` helpers are
unit-agnostic: outputs carry 1/L and 1/L^2 in the length unit of their
inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.constants import epsilon_0

from .errors import OutsideDomain
from .geometry import Role, TrapLayout

__all__ = [
    "FieldSample",
    "analytic_rect_basis",
    "solid_angle_combined",
    "charge_combined",
    "charge_potential_block",
    "GaplessLayoutField",
]

_UM = 1e-6

# corner signs for the double evaluation F(u1..u2, v1..v2)
_CORNERS = ((0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0))


@dataclass(frozen=True)
class FieldSample:
    """Potential (V), electric field E = -grad(phi) (V/m) and the
    Hessian of the potential (V/m^2) at one point."""

    potential: float
    e_field: np.ndarray
    hessian: np.ndarray


def _uv(rects: np.ndarray, pts: np.ndarray, i: int, j: int):
    """Corner offsets u = x_i - x, v = y_j - y with shape (M, P)."""
    u = rects[None, :, 0 + 2 * i] - pts[:, None, 0]
    v = rects[None, :, 1 + 2 * j] - pts[:, None, 1]
    return u, v


def _stable_plus(a: np.ndarray, other_sq: np.ndarray, R: np.ndarray) -> np.ndarray:
    """a + R computed without cancellation for a < 0.

    ``other_sq`` must equal R^2 - a^2 (sum of the squares of the other
    coordinates).  For a < 0 uses  a + R = other_sq / (R - a).
    """
    pos = a > 0.0
    denom = np.where(pos, 1.0, R - a)
    return np.where(pos, a + R, other_sq / denom)


# --------------------------------------------------------------------------
# Solid-angle (gapless plane) solution
# --------------------------------------------------------------------------

def solid_angle_combined(rects, weights, pts, want_hessian=True, block=2048):
    """Weighted unit-potential rectangle fields summed over rectangles.

    Parameters
    ----------
    rects : (P, 4) array
        Rectangles [x0, y0, x1, y1] at z = 0, any length unit L.
    weights : (P,) array
        Potential (volts) of each rectangle.
    pts : (M, 3) array
        Field points, z > 0, same unit L.

    Returns
    -------
    pot : (M,) potential in volts
    grad : (M, 3) gradient of the potential, V/L
    hess : (M, 3, 3) Hessian of the potential, V/L^2 (None unless asked)
    """
    rects = np.asarray(rects, dtype=float)
    weights = np.asarray(weights, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    M = pts.shape[0]
    pot = np.zeros(M)
    grad = np.zeros((M, 3))
    hess = np.zeros((M, 3, 3)) if want_hessian else None

    for lo in range(0, M, block):
        sl = slice(lo, min(lo + block, M))
        p = pts[sl]
        z = p[:, None, 2]
        z2 = z * z
        for i, j, s in _CORNERS:
            u, v = _uv(rects, p, i, j)
            u2, v2 = u * u, v * v
            A = u2 + z2
            B = v2 + z2
            R = np.sqrt(u2 + v2 + z2)
            sw = s * weights
            pot[sl] += np.arctan(u * v / (z * R)) @ sw
            grad[sl, 0] -= (z * v / (R * A)) @ sw
            grad[sl, 1] -= (z * u / (R * B)) @ sw
            grad[sl, 2] -= (u * v * (A + B) / (R * A * B)) @ sw
            if want_hessian:
                R2 = R * R
                R3 = R * R2
                uvz = u * v * z
                hess[sl, 0, 0] += (-uvz * (A + 2.0 * R2) / (R3 * A * A)) @ sw
                hess[sl, 1, 1] += (-uvz * (B + 2.0 * R2) / (R3 * B * B)) @ sw
                hess[sl, 2, 2] += (-uvz * (4.0 * R2 * A * B
                                           - (A + B) * (A * B + 2.0 * R2 * (A + B)))
                                   / (R3 * A * A * B * B)) @ sw
                hess[sl, 0, 1] += (z / R3) @ sw
                hess[sl, 0, 2] -= (v * ((u2 + v2) * A - 2.0 * z2 * R2)
                                   / (R3 * A * A)) @ sw
                hess[sl, 1, 2] -= (u * ((u2 + v2) * B - 2.0 * z2 * R2)
                                   / (R3 * B * B)) @ sw
    pot /= 2.0 * np.pi
    grad /= 2.0 * np.pi
    if want_hessian:
        hess /= 2.0 * np.pi
        hess[:, 1, 0] = hess[:, 0, 1]
        hess[:, 2, 0] = hess[:, 0, 2]
        hess[:, 2, 1] = hess[:, 1, 2]
    return pot, grad, hess


def solid_angle_potential(rects, weights, pts, block=4096):
    """Potential only (cheaper; no gradient/Hessian arrays)."""
    rects = np.asarray(rects, dtype=float)
    weights = np.asarray(weights, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = np.zeros(pts.shape[0])
    for lo in range(0, pts.shape[0], block):
        sl = slice(lo, min(lo + block, pts.shape[0]))
        p = pts[sl]
        z = p[:, None, 2]
        acc = 0.0
        for i, j, s in _CORNERS:
            u, v = _uv(rects, p, i, j)
            R = np.sqrt(u * u + v * v + z * z)
            acc = acc + s * np.arctan(u * v / (z * R))
        out[sl] = (acc @ weights) / (2.0 * np.pi)
    return out


# --------------------------------------------------------------------------
# Uniformly charged rectangle (BEM kernel)
# --------------------------------------------------------------------------

def _F_potential(u, v, z2, R):
    """Corner antiderivative of the 1/r kernel; valid for z >= 0."""
    u2, v2 = u * u, v * v
    vR = _stable_plus(v, u2 + z2, R)
    uR = _stable_plus(u, v2 + z2, R)
    # u*ln(v+R): finite limit 0 when the log argument degenerates (u -> 0)
    t1 = np.where(vR > 0.0, u * np.log(np.where(vR > 0.0, vR, 1.0)), 0.0)
    t2 = np.where(uR > 0.0, v * np.log(np.where(uR > 0.0, uR, 1.0)), 0.0)
    zRsafe = np.where(z2 > 0.0, np.sqrt(z2) * R, 1.0)
    t3 = np.where(z2 > 0.0, -np.sqrt(z2) * np.arctan(u * v / zRsafe), 0.0)
    return t1 + t2 + t3


def charge_potential_block(rects, pts):
    """Kernel integral  I = \\int dA' / |r - r'|  for each (point, rect).

    Valid for z >= 0 including in-plane points (used for collocation
    rows).  Returns shape (M, P) in the length unit of the inputs; the
    physical potential is ``sigma * I / (4 pi eps0)`` with everything in
    SI.
    """
    rects = np.asarray(rects, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    z = pts[:, None, 2] if pts.shape[1] == 3 else np.zeros((pts.shape[0], 1))
    z2 = z * z
    acc = 0.0
    for i, j, s in _CORNERS:
        u, v = _uv(rects, pts, i, j)
        R = np.sqrt(u * u + v * v + z2)
        acc = acc + s * _F_potential(u, v, z2, R)
    return acc


def charge_combined(rects, sigmas, pts, want_hessian=True, block=2048):
    """Fields of a weighted sum of uniformly charged rectangles, z > 0.

    Outputs are the raw kernel sums: potential-like (M,), gradient (M, 3)
    and Hessian (M, 3, 3) of  sum_p sigma_p * I_p;  multiply by
    1/(4 pi eps0) with SI lengths to get volts.
    """
    rects = np.asarray(rects, dtype=float)
    sigmas = np.asarray(sigmas, dtype=float)
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    M = pts.shape[0]
    pot = np.zeros(M)
    grad = np.zeros((M, 3))
    hess = np.zeros((M, 3, 3)) if want_hessian else None

    for lo in range(0, M, block):
        sl = slice(lo, min(lo + block, M))
        p = pts[sl]
        z = p[:, None, 2]
        z2 = z * z
        for i, j, s in _CORNERS:
            u, v = _uv(rects, p, i, j)
            u2, v2 = u * u, v * v
            A = u2 + z2
            B = v2 + z2
            R = np.sqrt(u2 + v2 + z2)
            vR = _stable_plus(v, A, R)
            uR = _stable_plus(u, B, R)
            log_vR = np.log(vR)
            log_uR = np.log(uR)
            atan_uv = np.arctan(u * v / (z * R))
            sw = s * sigmas
            pot[sl] += (u * log_vR + v * log_uR - z * atan_uv) @ sw
            grad[sl, 0] -= (log_vR + 1.0 - z2 / A) @ sw
            grad[sl, 1] -= (log_uR + 1.0 - z2 / B) @ sw
            grad[sl, 2] += (z * u / A + z * v / B - atan_uv) @ sw
            if want_hessian:
                hess[sl, 0, 0] += (u / (R * vR) + 2.0 * z2 * u / (A * A)) @ sw
                hess[sl, 1, 1] += (v / (R * uR) + 2.0 * z2 * v / (B * B)) @ sw
                hess[sl, 2, 2] += (u * (u2 - z2) / (A * A)
                                   + v * (v2 - z2) / (B * B)
                                   + u * v * (A + B) / (R * A * B)) @ sw
                hess[sl, 0, 1] += (1.0 / R) @ sw
                hess[sl, 0, 2] -= (z / (R * vR) - 2.0 * u2 * z / (A * A)) @ sw
                hess[sl, 1, 2] -= (z / (R * uR) - 2.0 * v2 * z / (B * B)) @ sw
    if want_hessian:
        hess[:, 1, 0] = hess[:, 0, 1]
        hess[:, 2, 0] = hess[:, 0, 2]
        hess[:, 2, 1] = hess[:, 1, 2]
    return pot, grad, hess


# --------------------------------------------------------------------------
# Spec-level single-rectangle oracle
# --------------------------------------------------------------------------

def analytic_rect_basis(rect, point) -> FieldSample:
    """Field above a plane where one rectangle is at 1 V, rest grounded.

    Parameters
    ----------
    rect : (4,) array-like
        [x0, y0, x1, y1] in µm.
    point : (3,) array-like
        Evaluation point in µm with point[2] > 0.
    """
    point = np.asarray(point, dtype=float)
    if point[2] <= 0.0:
        raise OutsideDomain(f"analytic rectangle field requires z > 0, got z={point[2]}")
    r = np.asarray(rect, dtype=float).reshape(1, 4)
    r = np.array([[min(r[0, 0], r[0, 2]), min(r[0, 1], r[0, 3]),
                   max(r[0, 0], r[0, 2]), max(r[0, 1], r[0, 3])]])
    pot, grad, hess = solid_angle_combined(r, np.ones(1), point.reshape(1, 3))
    return FieldSample(float(pot[0]),
                       -grad[0] / _UM,
                       hess[0] / _UM ** 2)


# --------------------------------------------------------------------------
# Gapless-plane layout field model
# --------------------------------------------------------------------------

def _poly_to_rects(poly):
    """Exact cover of a rectilinear polygon by axis-aligned rectangles."""
    v = poly.vertices
    if not poly.is_rectilinear():
        raise OutsideDomain("gapless-plane model supports rectilinear polygons only")
    ys = np.unique(v[:, 1])
    rects = []
    edges = np.stack([v, np.roll(v, -1, axis=0)], axis=1)  # (E, 2, 2)
    for y0, y1 in zip(ys[:-1], ys[1:]):
        ym = 0.5 * (y0 + y1)
        xs = []
        for (ax, ay), (bx, by) in edges:
            if ax == bx and min(ay, by) < ym < max(ay, by):
                xs.append(ax)
        xs.sort()
        for x0, x1 in zip(xs[0::2], xs[1::2]):
            rects.append((x0, y0, x1, y1))
    return np.array(rects, dtype=float).reshape(-1, 4)


class _GaplessScalar:
    """One linear combination of electrode potentials, gapless plane."""

    def __init__(self, rects, weights):
        self._rects = rects
        self._weights = weights

    def evaluate(self, points_um, want_hessian=True):
        pts = np.atleast_2d(np.asarray(points_um, dtype=float))
        if np.any(pts[:, 2] <= 0.0):
            raise OutsideDomain("field evaluation requires z > 0")
        pot, grad, hess = solid_angle_combined(self._rects, self._weights, pts,
                                               want_hessian=want_hessian)
        e = -grad / _UM
        h = hess / _UM ** 2 if want_hessian else None
        return pot, e, h

    def potential(self, points_um):
        pts = np.atleast_2d(np.asarray(points_um, dtype=float))
        if np.any(pts[:, 2] <= 0.0):
            raise OutsideDomain("field evaluation requires z > 0")
        return solid_angle_potential(self._rects, self._weights, pts)


class GaplessLayoutField:
    """Per-electrode basis fields in the gapless-plane approximation.

    Each electrode's basis ignores the gaps (treats the rest of the plane
    as grounded right up to the electrode edge).  Fast and fully analytic;
    accurate when gaps are small compared to the ion height.  Implements
    the same interface as the boundary-element ``BasisSolution``:
    ``electrode_names``, ``rf_names``, ``control_names``, ``weighted``,
    ``sample`` and ``seed_box``.
    """

    def __init__(self, layout: TrapLayout):
        self.layout = layout
        self.electrode_names = layout.names
        self.rf_names = tuple(e.name for e in layout.electrodes if e.role is Role.RF)
        self.control_names = tuple(e.name for e in layout.electrodes
                                   if e.role is Role.CONTROL)
        self._rects = {}
        for e in layout.electrodes:
            parts = [_poly_to_rects(p) for p in e.polygons]
            self._rects[e.name] = np.vstack(parts)

    def weighted(self, weights: Mapping[str, float]) -> _GaplessScalar:
        rects = []
        ws = []
        for name, w in weights.items():
            if name not in self._rects:
                raise KeyError(name)
            if w == 0.0:
                continue
            r = self._rects[name]
            rects.append(r)
            ws.append(np.full(r.shape[0], float(w)))
        if not rects:
            return _GaplessScalar(np.zeros((0, 4)), np.zeros(0))
        return _GaplessScalar(np.vstack(rects), np.concatenate(ws))

    def sample(self, point_um) -> dict[str, FieldSample]:
        point = np.asarray(point_um, dtype=float).reshape(1, 3)
        out = {}
        for name in self.electrode_names:
            pot, e, h = self.weighted({name: 1.0}).evaluate(point)
            out[name] = FieldSample(float(pot[0]), e[0], h[0])
        return out

    def seed_box(self):
        import numpy as _np
        driven = [e for e in self.layout.electrodes if e.role is not Role.GROUND]
        bs = _np.array([e.bounds for e in (driven or self.layout.electrodes)])
        b = _np.array([bs[:, 0].min(), bs[:, 1].min(), bs[:, 2].max(), bs[:, 3].max()])
        transverse = b[3] - b[1]
        lo = _np.array([b[0] / 2.0, b[1], 2.0])
        hi = _np.array([b[2] / 2.0, b[3], max(transverse, 20.0)])
        return lo, hi
