"""Boundary-element solution of the electrostatic basis fields.

Each electrode k gets a unit-potential basis: panel charge densities
solving the dense collocation system with 1 V on electrode k and 0 V on
everything else (including the meshed grounded plane).  The kernel is
1/(4 pi eps0 r) with the panel self-term handled by the exact closed-form
integral over the rectangle, collocated at panel centroids.

``BasisSolution`` implements the shared field-model interface used across
the package: ``electrode_names`` / ``rf_names`` / ``control_names``
attributes, ``weighted(weights) -> scalar field``, ``sample(point)`` and
``seed_box()``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np
import scipy.linalg as sla
from scipy.constants import epsilon_0

from .errors import OutsideDomain, SolveFailed
from .geometry import Role
from .mesh import GROUND, PanelMesh
from .rectfield import FieldSample, charge_combined, charge_potential_block

__all__ = ["BasisSolution", "solve_basis", "evaluate_basis", "field_map_rows"]

_UM = 1e-6
_K_E = 1.0 / (4.0 * np.pi * epsilon_0)


def _influence_matrix(rects_m: np.ndarray, block: int = 512) -> np.ndarray:
    n = rects_m.shape[0]
    pts = np.column_stack([(rects_m[:, 0] + rects_m[:, 2]) / 2.0,
                           (rects_m[:, 1] + rects_m[:, 3]) / 2.0,
                           np.zeros(n)])
    K = np.empty((n, n))
    for lo in range(0, n, block):
        hi = min(lo + block, n)
        K[lo:hi] = charge_potential_block(rects_m, pts[lo:hi])
    K *= _K_E
    return K


class _ChargeScalar:
    """Linear combination of basis charge distributions, evaluable anywhere
    in the upper half space."""

    def __init__(self, rects_m: np.ndarray, sigma: np.ndarray):
        self._rects = rects_m
        self._sigma = sigma

    def evaluate(self, points_um, want_hessian=True, block=512):
        pts = np.atleast_2d(np.asarray(points_um, dtype=float)) * _UM
        if np.any(pts[:, 2] <= 0.0):
            raise OutsideDomain("field evaluation requires z > 0")
        pot, grad, hess = charge_combined(self._rects, self._sigma, pts,
                                          want_hessian=want_hessian, block=block)
        pot *= _K_E
        e = -grad * _K_E
        h = hess * _K_E if want_hessian else None
        return pot, e, h

    def potential(self, points_um, block=2048):
        pts = np.atleast_2d(np.asarray(points_um, dtype=float)) * _UM
        if np.any(pts[:, 2] <= 0.0):
            raise OutsideDomain("field evaluation requires z > 0")
        out = np.empty(pts.shape[0])
        for lo in range(0, pts.shape[0], block):
            hi = min(lo + block, pts.shape[0])
            out[lo:hi] = charge_potential_block(self._rects, pts[lo:hi]) @ self._sigma
        return out * _K_E


@dataclass(frozen=True)
class BasisSolution:
    """Per-electrode unit-potential charge solutions on a panel mesh.

    ``charge_densities`` has shape (n_panels, n_electrodes) in C/m^2 per
    volt of the owning electrode (all others grounded).
    """

    mesh: PanelMesh
    charge_densities: np.ndarray
    bc_residual: float

    def __post_init__(self):
        s = np.ascontiguousarray(self.charge_densities, dtype=float)
        s.flags.writeable = False
        object.__setattr__(self, "charge_densities", s)

    @cached_property
    def _rects_m(self) -> np.ndarray:
        return self.mesh.bounds * _UM

    @property
    def electrode_names(self) -> tuple[str, ...]:
        return self.mesh.names

    @property
    def rf_names(self) -> tuple[str, ...]:
        return tuple(n for n, r in zip(self.mesh.names, self.mesh.roles) if r is Role.RF)

    @property
    def control_names(self) -> tuple[str, ...]:
        return tuple(n for n, r in zip(self.mesh.names, self.mesh.roles)
                     if r is Role.CONTROL)

    def weighted(self, weights: Mapping[str, float]) -> _ChargeScalar:
        sigma = np.zeros(len(self.mesh))
        for name, w in weights.items():
            k = self.mesh.names.index(name)  # raises ValueError for unknown
            sigma += float(w) * self.charge_densities[:, k]
        return _ChargeScalar(self._rects_m, sigma)

    def sample(self, point_um) -> dict[str, FieldSample]:
        point = np.asarray(point_um, dtype=float).reshape(1, 3)
        out = {}
        for k, name in enumerate(self.mesh.names):
            pot, e, h = _ChargeScalar(self._rects_m,
                                      self.charge_densities[:, k]).evaluate(point)
            out[name] = FieldSample(float(pot[0]), e[0], h[0])
        return out

    def seed_box(self):
        keep = [o >= 0 and self.mesh.roles[o] is not Role.GROUND
                for o in self.mesh.owner]
        b = self.mesh.bounds[np.asarray(keep)]
        core = np.array([b[:, 0].min(), b[:, 1].min(), b[:, 2].max(), b[:, 3].max()])
        transverse = core[3] - core[1]
        lo = np.array([core[0] / 2.0, core[1], 2.0])
        hi = np.array([core[2] / 2.0, core[3], max(transverse, 20.0)])
        return lo, hi


def solve_basis(mesh: PanelMesh, *, rcond_floor: float = 1e-14) -> BasisSolution:
    """Solve the collocation system for every electrode basis at once.

    Raises
    ------
    SolveFailed
        If the influence matrix is singular or has a reciprocal condition
        estimate below ``rcond_floor``.
    """
    if len(mesh) == 0:
        raise SolveFailed("empty panel mesh")
    rects_m = mesh.bounds * _UM
    K = _influence_matrix(rects_m)
    n_elec = len(mesh.names)
    B = np.zeros((len(mesh), n_elec))
    for k in range(n_elec):
        B[:, k] = mesh.owner == k

    anorm = np.abs(K).sum(axis=0).max()
    try:
        lu, piv = sla.lu_factor(K)
    except np.linalg.LinAlgError as exc:
        raise SolveFailed(f"LU factorization failed: {exc}") from exc
    rcond, _ = sla.lapack.dgecon(lu, anorm, norm="1")
    if not np.isfinite(rcond) or rcond < rcond_floor:
        raise SolveFailed("influence matrix ill-conditioned",
                          condition=float(1.0 / max(rcond, np.finfo(float).tiny)))
    sigma = sla.lu_solve((lu, piv), B)
    residual = float(np.abs(K @ sigma - B).max())
    if residual > 1e-3:
        raise SolveFailed(f"boundary condition residual {residual:.3e} V exceeds 1e-3 V",
                          condition=float(1.0 / rcond))
    return BasisSolution(mesh=mesh, charge_densities=sigma, bc_residual=residual)


def evaluate_basis(basis: BasisSolution, point_um) -> dict[str, FieldSample]:
    """Per-electrode potential, field and Hessian at one point (µm, z > 0)."""
    point = np.asarray(point_um, dtype=float)
    if point[2] <= 0.0:
        raise OutsideDomain(f"evaluation requires z > 0, got z={point[2]}")
    return basis.sample(point)


def field_map_rows(field, points_um):
    """Rows for the field-map CSV: one per (point, electrode basis).

    Points are sorted lexicographically by (x, y, z); electrodes follow
    declaration order within each point.  Fields are SI (V, V/m).
    """
    pts = np.atleast_2d(np.asarray(points_um, dtype=float))
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    pts = pts[order]
    names = field.electrode_names
    per_elec = []
    for name in names:
        pot, e, _ = field.weighted({name: 1.0}).evaluate(pts, want_hessian=False)
        per_elec.append((pot, e))
    for m in range(pts.shape[0]):
        for k, name in enumerate(names):
            pot, e = per_elec[k]
            yield (pts[m, 0], pts[m, 1], pts[m, 2], name,
                   pot[m], e[m, 0], e[m, 1], e[m, 2])
