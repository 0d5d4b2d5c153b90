"""RF pseudopotential, trap characterization and stability parameters.

Works on any field model exposing the shared interface (``weighted``,
``electrode_names``/``rf_names``/``control_names``, ``seed_box``): the
boundary-element ``BasisSolution``, the analytic ``GaplessLayoutField``
or a synthetic model such as ``QuadrupoleField``.

Conventions: geometry in µm, energies in eV, fields in SI.  The total
effective energy of an ion with charge number Z is

    U(r) = (Z e)^2 |E_rf(r)|^2 / (4 m Omega^2)  +  Z e Phi_static(r)

with E_rf the field per unit drive amplitude times ``v_rf``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.constants import atomic_mass, elementary_charge

from .errors import (InvalidDirection, InvalidParams, NotATrap, NullNotFound,
                     UnknownElectrode)
from .mathieu import MATHIEU_Q_EDGE

__all__ = [
    "IonSpecies",
    "DriveParams",
    "VoltageSet",
    "TrapReport",
    "EffectivePotential",
    "QuadrupoleField",
    "pseudo_at",
    "total_at",
    "find_rf_null",
    "characterize_trap",
    "laser_overlap_check",
    "axial_scan",
]

_UM = 1e-6
_EV = elementary_charge


@dataclass(frozen=True)
class IonSpecies:
    """Trapped ion species; mass in atomic mass units, charge in units
    of the elementary charge."""

    mass_amu: float
    charge: int = 1

    def __post_init__(self):
        if not (self.mass_amu > 0.0):
            raise InvalidParams("ion mass must be > 0")
        if self.charge == 0:
            raise InvalidParams("ion charge must be nonzero")

    @property
    def mass_kg(self) -> float:
        return self.mass_amu * atomic_mass

    @property
    def charge_coulomb(self) -> float:
        return self.charge * elementary_charge


MG24 = IonSpecies(mass_amu=24.0, charge=1)


@dataclass(frozen=True)
class DriveParams:
    """RF drive: zero-to-peak amplitude (volts, with respect to ground)
    and angular frequency (rad/s)."""

    v_rf: float
    omega_rf: float

    def __post_init__(self):
        if not (self.v_rf > 0.0 and self.omega_rf > 0.0):
            raise InvalidParams("drive amplitude and frequency must be > 0")

    @classmethod
    def from_frequency(cls, v_rf: float, frequency_hz: float) -> "DriveParams":
        return cls(v_rf=v_rf, omega_rf=2.0 * np.pi * frequency_hz)


@dataclass(frozen=True)
class VoltageSet:
    """Static control potentials plus the RF electrode assignment."""

    control: dict[str, float]
    rf_assignment: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "control", dict(self.control))
        object.__setattr__(self, "rf_assignment", tuple(self.rf_assignment))
        for name in self.control:
            if name in self.rf_assignment:
                raise InvalidParams(f"RF electrode {name!r} cannot carry a static entry")

    def validate_against(self, fieldmodel) -> None:
        names = set(fieldmodel.electrode_names)
        for name in list(self.control) + list(self.rf_assignment):
            if name not in names:
                raise UnknownElectrode(f"electrode {name!r} not in field model")
        controls = set(getattr(fieldmodel, "control_names", names))
        for name in self.control:
            if name not in controls:
                raise UnknownElectrode(f"{name!r} is not a control electrode")


def paper_voltages(rf_names=("rf1", "rf2")) -> VoltageSet:
    """The published five-electrode static operating point."""
    return VoltageSet(control={"control1": 0.32, "control2": 0.72,
                               "control3": 0.74, "control4": -0.90,
                               "control5": 1.00},
                      rf_assignment=tuple(rf_names))


# --------------------------------------------------------------------------
# Synthetic field model (ideal linear Paul trap)
# --------------------------------------------------------------------------

class _AnalyticScalar:
    def __init__(self, fn):
        self._fn = fn

    def evaluate(self, points_um, want_hessian=True):
        pts = np.atleast_2d(np.asarray(points_um, dtype=float))
        pot, grad, hess = self._fn(pts)
        return pot, -grad, (hess if want_hessian else None)

    def potential(self, points_um):
        return self.evaluate(points_um, want_hessian=False)[0]


class QuadrupoleField:
    """Ideal linear Paul trap basis fields (synthetic oracle).

    The "rf" electrode carries the pure 2D quadrupole
    ``phi = kappa (y^2 - z^2) / 2`` and the "endcap" electrode the static
    confinement ``phi = gamma (x^2 - (y^2 + z^2)/2) / 2`` (both per volt,
    kappa and gamma in 1/m^2, coordinates still passed in µm).
    """

    electrode_names = ("rf", "endcap")
    rf_names = ("rf",)
    control_names = ("endcap",)

    def __init__(self, kappa: float, gamma: float, center=(0.0, 0.0, 50.0)):
        self.kappa = kappa
        self.gamma = gamma
        self.center = np.asarray(center, dtype=float)

    def _rel_m(self, pts):
        return (pts - self.center) * _UM

    def weighted(self, weights: Mapping[str, float]):
        w_rf = 0.0
        w_dc = 0.0
        for name, w in weights.items():
            if name == "rf":
                w_rf = float(w)
            elif name == "endcap":
                w_dc = float(w)
            else:
                raise KeyError(name)

        def fn(pts):
            r = self._rel_m(pts)
            x, y, z = r[:, 0], r[:, 1], r[:, 2]
            k, g = self.kappa * w_rf, self.gamma * w_dc
            pot = 0.5 * k * (y * y - z * z) + 0.5 * g * (x * x - 0.5 * (y * y + z * z))
            grad = np.column_stack([g * x, k * y - 0.5 * g * y, -k * z - 0.5 * g * z])
            hess = np.zeros((pts.shape[0], 3, 3))
            hess[:, 0, 0] = g
            hess[:, 1, 1] = k - 0.5 * g
            hess[:, 2, 2] = -k - 0.5 * g
            return pot, grad, hess

        return _AnalyticScalar(fn)

    def seed_box(self):
        return self.center - 20.0, self.center + 20.0


class UniformRFField:
    """Synthetic model with a spatially uniform RF basis field magnitude
    (gradient per volt in V/m); used to pin the ponderomotive formula."""

    electrode_names = ("rf",)
    rf_names = ("rf",)
    control_names = ()

    def __init__(self, grad_per_volt):
        self.grad = np.asarray(grad_per_volt, dtype=float)

    def weighted(self, weights):
        w = float(weights.get("rf", 0.0))

        def fn(pts):
            n = pts.shape[0]
            pot = -(pts * _UM) @ (self.grad * w)
            grad = np.tile(self.grad * w, (n, 1))
            return pot, grad, np.zeros((n, 3, 3))

        return _AnalyticScalar(fn)

    def seed_box(self):
        return np.array([-1e3, -1e3, 1.0]), np.array([1e3, 1e3, 1e3])


# --------------------------------------------------------------------------
# Effective potential
# --------------------------------------------------------------------------

class EffectivePotential:
    """Pseudopotential plus static energy surface for one operating point.

    Prepares combined RF and static scalar fields once, then evaluates
    energies (eV), gradients (eV/µm) and finite-difference-corrected
    Hessians (eV/µm^2) at arbitrary points.
    """

    def __init__(self, fieldmodel, drive: DriveParams, ion: IonSpecies,
                 voltages: VoltageSet | None = None):
        self.field = fieldmodel
        self.drive = drive
        self.ion = ion
        self.voltages = voltages
        rf_names = voltages.rf_assignment if voltages is not None else fieldmodel.rf_names
        if voltages is not None:
            voltages.validate_against(fieldmodel)
        self._rf = fieldmodel.weighted({n: 1.0 for n in rf_names})
        statics = dict(voltages.control) if voltages is not None else {}
        self._static = fieldmodel.weighted(statics) if statics else None
        q = ion.charge_coulomb
        m = ion.mass_kg
        self._pseudo_coef = q * q * drive.v_rf ** 2 / (4.0 * m * drive.omega_rf ** 2)

    # -- pseudopotential ---------------------------------------------------

    def pseudo_energy(self, points_um) -> np.ndarray:
        """Ponderomotive energy in eV at each point."""
        _, e, _ = self._rf.evaluate(points_um, want_hessian=False)
        return self._pseudo_coef * np.sum(e * e, axis=1) / _EV

    def pseudo_energy_grad(self, points_um):
        """Energy (eV) and gradient (eV/µm)."""
        _, e, h = self._rf.evaluate(points_um)
        energy = self._pseudo_coef * np.sum(e * e, axis=1) / _EV
        # grad |grad phi|^2 = 2 H grad(phi) = -2 H E
        grad = -2.0 * self._pseudo_coef * np.einsum("mab,mb->ma", h, e) / _EV * _UM
        return energy, grad

    # -- static ------------------------------------------------------------

    def static_energy(self, points_um) -> np.ndarray:
        if self._static is None:
            return np.zeros(np.atleast_2d(points_um).shape[0])
        pot = self._static.potential(points_um)
        return self.ion.charge * pot

    def static_energy_grad(self, points_um):
        n = np.atleast_2d(points_um).shape[0]
        if self._static is None:
            return np.zeros(n), np.zeros((n, 3))
        pot, e, _ = self._static.evaluate(points_um, want_hessian=False)
        Z = self.ion.charge
        return Z * pot, -Z * e * _UM

    def static_field_hessian(self, point_um):
        """Static potential field (V/m) and Hessian (V/m^2) at one point."""
        if self._static is None:
            return np.zeros(3), np.zeros((3, 3))
        _, e, h = self._static.evaluate(np.asarray(point_um).reshape(1, 3))
        return e[0], h[0]

    # -- total -------------------------------------------------------------

    def energy(self, points_um) -> np.ndarray:
        return self.pseudo_energy(points_um) + self.static_energy(points_um)

    def energy_grad(self, points_um):
        ep, gp = self.pseudo_energy_grad(points_um)
        es, gs = self.static_energy_grad(points_um)
        return ep + es, gp + gs

    def hessian(self, point_um, step_um: float = 0.01) -> np.ndarray:
        """Total-energy Hessian (eV/µm^2) by central differences of the
        analytic gradient (captures the full third-derivative content of
        the pseudopotential)."""
        p = np.asarray(point_um, dtype=float)
        pts = np.vstack([p + step_um * d for d in np.eye(3)]
                        + [p - step_um * d for d in np.eye(3)])
        _, g = self.energy_grad(pts)
        H = np.empty((3, 3))
        for i in range(3):
            H[i] = (g[i] - g[i + 3]) / (2.0 * step_um)
        return 0.5 * (H + H.T)

    def rf_field_hessian(self, point_um):
        """Unit-amplitude RF basis: field (V/m) and Hessian (V/m^2)."""
        _, e, h = self._rf.evaluate(np.asarray(point_um).reshape(1, 3))
        return e[0], h[0]


# --------------------------------------------------------------------------
# Module-level operations
# --------------------------------------------------------------------------

def pseudo_at(fieldmodel, drive: DriveParams, ion: IonSpecies, point_um):
    """Ponderomotive energy (eV) and its gradient (eV/µm) at one point."""
    eff = EffectivePotential(fieldmodel, drive, ion)
    p = np.asarray(point_um, dtype=float).reshape(1, 3)
    energy, grad = eff.pseudo_energy_grad(p)
    return float(energy[0]), grad[0]


def total_at(fieldmodel, drive: DriveParams, ion: IonSpecies,
             voltages: VoltageSet, point_um) -> float:
    """Total effective energy (eV): pseudopotential + static."""
    eff = EffectivePotential(fieldmodel, drive, ion, voltages)
    return float(eff.energy(np.asarray(point_um, dtype=float).reshape(1, 3))[0])


def _grid_points(lo, hi, n):
    axes = [np.linspace(lo[k], hi[k], n[k]) for k in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel(), Z.ravel()]), axes


def find_rf_null(fieldmodel, drive: DriveParams, seed_region=None, *,
                 tolerance_v_per_m: float = 1.0, fixed_axial: float | None = None,
                 max_iter: int = 200) -> np.ndarray:
    """Locate the point minimizing |E_rf|^2 (the RF null), in µm.

    With ``fixed_axial`` the axial coordinate x is pinned and the null is
    found in the transverse (y, z) plane only; the tolerance then applies
    to the transverse field components (the residual axial RF field is a
    property of the trap, not of the compensation).
    """
    rf = fieldmodel.weighted({n: 1.0 for n in fieldmodel.rf_names})
    if seed_region is None:
        lo, hi = fieldmodel.seed_box()
    else:
        lo, hi = (np.asarray(seed_region[0], dtype=float),
                  np.asarray(seed_region[1], dtype=float))
    if fixed_axial is not None:
        lo = lo.copy(); hi = hi.copy()
        lo[0] = hi[0] = fixed_axial
    n = (1 if hi[0] == lo[0] else 11, 17, 23)
    pts, _ = _grid_points(lo, hi, n)
    # seed metric: Newton step length |E| / ||H||, an estimate of the
    # distance to the null; unlike |E|^2 it does not decay far from the
    # trap.  Candidates are tried best-first since the metric can also
    # dip near electrode edges where no null exists.
    _, e, h = rf.evaluate(pts)
    hnorm = np.sqrt(np.einsum("mab,mab->m", h, h))
    metric = np.linalg.norm(e, axis=1) / np.where(hnorm > 0.0, hnorm, np.inf)
    order = np.argsort(metric)

    idx = slice(1, 3) if fixed_axial is not None else slice(0, 3)
    span = float(np.max(hi - lo))
    limit = max(2.0, 0.05 * span)
    for cand in order[:8]:
        p = pts[cand].copy()
        converged = False
        for _ in range(max_iter):
            _, e, h = rf.evaluate(p.reshape(1, 3))
            P = -e[0][idx]                 # gradient of the basis potential
            H = h[0][idx, idx]
            A = H.T @ H
            lam = 1e-12 * np.trace(A)
            try:
                step_m = np.linalg.solve(A + lam * np.eye(A.shape[0]), -(H.T @ P))
            except np.linalg.LinAlgError:
                break
            step = np.clip(step_m * 1e6, -limit, limit)
            p[idx] += step
            if np.linalg.norm(step) < 1e-10:
                converged = True
                break
            if (p[2] <= 0.0 or np.any(p < lo - (hi - lo) - 20.0)
                    or np.any(p > hi + (hi - lo) + 20.0)):
                break
        if converged:
            _, e, _ = rf.evaluate(p.reshape(1, 3))
            resid = drive.v_rf * np.linalg.norm(e[0][idx])
            if resid <= tolerance_v_per_m:
                return p
    raise NullNotFound("no RF field null found in the search region "
                       f"(tolerance {tolerance_v_per_m:.3g} V/m)")


@dataclass(frozen=True)
class TrapReport:
    """Characterization bundle for one operating point."""

    rf_null: np.ndarray            # µm; transverse RF null at the trap's x
    minimum: np.ndarray            # µm; minimum of the total potential
    ion_height: float              # µm
    secular_freqs: np.ndarray      # Hz, ascending
    principal_axes: np.ndarray     # columns = unit axes, matching freqs
    depth: float                   # eV
    escape_point: np.ndarray       # µm
    depth_is_lower_bound: bool
    mathieu_q: np.ndarray          # per principal axis
    mathieu_a: np.ndarray
    stable: bool

    def as_dict(self) -> dict:
        return {
            "rf_null_um": list(self.rf_null),
            "minimum_um": list(self.minimum),
            "ion_height_um": self.ion_height,
            "secular_freqs_hz": list(self.secular_freqs),
            "principal_axes": [list(col) for col in self.principal_axes.T],
            "depth_ev": self.depth,
            "escape_point_um": list(self.escape_point),
            "depth_is_lower_bound": self.depth_is_lower_bound,
            "mathieu_q": list(self.mathieu_q),
            "mathieu_a": list(self.mathieu_a),
            "stable": self.stable,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrapReport":
        axes = np.array(d["principal_axes"]).T
        return cls(rf_null=np.array(d["rf_null_um"]),
                   minimum=np.array(d["minimum_um"]),
                   ion_height=float(d["ion_height_um"]),
                   secular_freqs=np.array(d["secular_freqs_hz"]),
                   principal_axes=axes,
                   depth=float(d["depth_ev"]),
                   escape_point=np.array(d["escape_point_um"]),
                   depth_is_lower_bound=bool(d["depth_is_lower_bound"]),
                   mathieu_q=np.array(d["mathieu_q"]),
                   mathieu_a=np.array(d["mathieu_a"]),
                   stable=bool(d["stable"]))


def _minimize_total(eff: EffectivePotential, seed, *, gtol=1e-9, max_iter=300,
                    min_height=0.2):
    """Damped Newton with gradient-descent fallback on the total energy."""
    p = np.asarray(seed, dtype=float).copy()
    energy, grad = eff.energy_grad(p.reshape(1, 3))
    f0, g = float(energy[0]), grad[0]
    for _ in range(max_iter):
        if np.linalg.norm(g) < gtol:
            return p
        H = eff.hessian(p)
        try:
            ew = np.linalg.eigvalsh(H)
            shift = max(0.0, 1e-8 * abs(ew).max() - ew.min())
            step = np.linalg.solve(H + shift * np.eye(3), -g)
        except np.linalg.LinAlgError:
            step = -g / max(np.linalg.norm(g), 1e-300)
        nstep = np.linalg.norm(step)
        if nstep > 10.0:
            step *= 10.0 / nstep
        # backtracking line search; never leave the z > 0 half space
        t = 1.0
        for _ in range(40):
            trial = p + t * step
            if trial[2] > min_height:
                energy, grad = eff.energy_grad(trial.reshape(1, 3))
                if float(energy[0]) <= f0 + 1e-4 * t * (g @ step):
                    break
            t *= 0.5
        else:
            raise NotATrap("line search failed to find a descent point")
        p = p + t * step
        f0, g = float(energy[0]), grad[0]
    if np.linalg.norm(g) < 1e3 * gtol:
        return p
    raise NotATrap(f"minimization stalled, |grad| = {np.linalg.norm(g):.3g} eV/um")


def _priority_flood_depth(eff, lo, hi, spacing, u_min, min_point):
    """Minimax escape barrier on a regular grid via priority flooding.

    Returns (barrier energy, pass point, lower_bound_flag)."""
    import heapq

    n = [max(2, int(np.floor((hi[k] - lo[k]) / spacing)) + 1) for k in range(3)]
    pts, axes = _grid_points(lo, hi, n)
    U = eff.energy(pts).reshape(n)
    nx, ny, nz = n
    start = np.unravel_index(int(np.argmin(
        np.sum((pts - np.asarray(min_point)) ** 2, axis=1))), n)
    visited = np.zeros(n, dtype=bool)
    heap = [(U[start], start)]
    visited[start] = True
    level = -np.inf
    pass_idx = start
    while heap:
        u, (i, j, k) = heapq.heappop(heap)
        if u > level:
            level = u
            pass_idx = (i, j, k)
        if i in (0, nx - 1) or j in (0, ny - 1) or k in (0, nz - 1):
            on_boundary = (pass_idx[0] in (0, nx - 1) or pass_idx[1] in (0, ny - 1)
                           or pass_idx[2] in (0, nz - 1))
            point = np.array([axes[0][pass_idx[0]], axes[1][pass_idx[1]],
                              axes[2][pass_idx[2]]])
            return level, point, on_boundary
        for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                           (0, 0, 1), (0, 0, -1)):
            a, b, c = i + di, j + dj, k + dk
            if 0 <= a < nx and 0 <= b < ny and 0 <= c < nz and not visited[a, b, c]:
                visited[a, b, c] = True
                heapq.heappush(heap, (U[a, b, c], (a, b, c)))
    return level, np.asarray(min_point, dtype=float), True


def _polish_saddle(eff, seed, *, max_step, max_shift, grad_step,
                   max_iter=60):
    """Newton iteration to the stationary point nearest ``seed``.

    Returns the refined point if it converges to an index-1 saddle within
    ``max_shift`` of the seed, else None (the grid barrier is kept)."""
    p = np.asarray(seed, dtype=float).copy()
    for _ in range(max_iter):
        _, grad = eff.energy_grad(p.reshape(1, 3))
        g = grad[0]
        H = eff.hessian(p, step_um=grad_step)
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            return None
        nstep = np.linalg.norm(step)
        if nstep > max_step:
            step *= max_step / nstep
        p = p + step
        if np.linalg.norm(p - seed) > max_shift or p[2] <= 0.0:
            return None
        if nstep < 1e-9:
            break
    ew = np.linalg.eigvalsh(eff.hessian(p, step_um=grad_step))
    if np.sum(ew < 0.0) == 1:
        return p
    return None


def characterize_trap(fieldmodel, drive: DriveParams, ion: IonSpecies,
                      voltages: VoltageSet, *, seed_region=None,
                      depth_box_factor=5.0,
                      depth_grid_um: float = 2.0,
                      depth_coarse_grid_um: float = 6.0,
                      min_height_um: float = 2.0) -> TrapReport:
    """Full characterization: minimum, secular modes, depth, stability.

    The minimum of the total potential is located by a coarse scan of the
    seed region followed by damped Newton iteration; the escape barrier by
    priority flooding of a coarse grid with local refinement around the
    found pass; Mathieu parameters from the RF/static curvatures along
    the principal axes at the minimum.
    """
    eff = EffectivePotential(fieldmodel, drive, ion, voltages)
    if seed_region is None:
        lo, hi = fieldmodel.seed_box()
    else:
        lo, hi = (np.asarray(seed_region[0], dtype=float),
                  np.asarray(seed_region[1], dtype=float))
    # Seed on the RF null line: ions live where the RF field vanishes
    # radially, so scan the total energy along that line rather than the
    # full box (whose global minimum sits on the electrode surfaces).
    x_mid = 0.5 * (lo[0] + hi[0])
    line0 = find_rf_null(fieldmodel, drive, (lo, hi), fixed_axial=x_mid,
                         tolerance_v_per_m=np.inf)
    n_x = 41 if hi[0] > lo[0] else 1
    xs = np.linspace(lo[0], hi[0], n_x)
    line_pts = np.column_stack([xs, np.full(n_x, line0[1]), np.full(n_x, line0[2])])
    U = eff.energy(line_pts)
    seed = line_pts[int(np.argmin(U))]
    minimum = _minimize_total(eff, seed)

    H = eff.hessian(minimum)
    H_J = H * _EV / _UM ** 2
    ew, ev = np.linalg.eigh(H_J)
    if np.any(ew <= 0.0):
        raise NotATrap(f"Hessian not positive definite at {minimum}")
    # deterministic eigenvector signs
    for i in range(3):
        j = int(np.argmax(np.abs(ev[:, i])))
        if ev[j, i] < 0:
            ev[:, i] = -ev[:, i]
    freqs = np.sqrt(ew / ion.mass_kg) / (2.0 * np.pi)

    null = find_rf_null(fieldmodel, drive, (lo, hi), fixed_axial=minimum[0],
                        tolerance_v_per_m=np.inf)

    # Mathieu parameters along principal axes
    E_rf, H_rf = eff.rf_field_hessian(minimum)
    _, H_st = eff.static_field_hessian(minimum)
    q_ion = ion.charge_coulomb
    m = ion.mass_kg
    k_rf = np.einsum("ai,ab,bi->i", ev, H_rf, ev)
    k_st = np.einsum("ai,ab,bi->i", ev, H_st, ev)
    mathieu_q = 2.0 * q_ion * drive.v_rf * np.abs(k_rf) / (m * drive.omega_rf ** 2)
    mathieu_a = 4.0 * q_ion * k_st / (m * drive.omega_rf ** 2)
    stable = bool(np.all(mathieu_q < MATHIEU_Q_EDGE))

    # depth: coarse flood, then Newton refinement of the found pass; the
    # box spans depth_box_factor (scalar or per-axis) times the ion height
    h_ion = minimum[2]
    factor = np.broadcast_to(np.asarray(depth_box_factor, dtype=float), (3,))
    half = factor * h_ion / 2.0
    box_lo = np.array([minimum[0] - half[0], minimum[1] - half[1],
                       max(min_height_um, h_ion - half[2])])
    box_hi = np.array([minimum[0] + half[0], minimum[1] + half[1],
                       h_ion + 2.0 * half[2]])
    u_min = float(eff.energy(minimum.reshape(1, 3))[0])
    barrier, pass_pt, lower_bound = _priority_flood_depth(
        eff, box_lo, box_hi, depth_coarse_grid_um, u_min, minimum)
    if not lower_bound:
        saddle = _polish_saddle(eff, pass_pt, max_step=depth_coarse_grid_um,
                                max_shift=2.5 * depth_coarse_grid_um,
                                grad_step=depth_grid_um / 4.0)
        if saddle is not None:
            pass_pt = saddle
            barrier = float(eff.energy(saddle.reshape(1, 3))[0])
    depth = max(barrier - u_min, 0.0)

    return TrapReport(rf_null=null, minimum=minimum, ion_height=float(minimum[2]),
                      secular_freqs=freqs, principal_axes=ev, depth=float(depth),
                      escape_point=pass_pt, depth_is_lower_bound=bool(lower_bound),
                      mathieu_q=mathieu_q, mathieu_a=mathieu_a, stable=stable)


@dataclass(frozen=True)
class LaserOverlap:
    projections: np.ndarray
    threshold: float
    passed: bool


def laser_overlap_check(report: TrapReport, beam_direction, *,
                        threshold: float = 0.1,
                        allow_out_of_plane: bool = False) -> LaserOverlap:
    """Projection of a cooling beam onto the principal axes.

    The beam must be a unit vector parallel to the trap surface
    (z component zero) unless ``allow_out_of_plane`` is set; cooling all
    modes requires a projection above ``threshold`` on every axis.
    """
    beam = np.asarray(beam_direction, dtype=float)
    if abs(np.linalg.norm(beam) - 1.0) > 1e-9:
        raise InvalidDirection("beam direction must be a unit vector")
    if not allow_out_of_plane and abs(beam[2]) > 1e-9:
        raise InvalidDirection("beam must propagate parallel to the trap surface")
    proj = np.abs(report.principal_axes.T @ beam)
    return LaserOverlap(projections=proj, threshold=threshold,
                        passed=bool(np.all(proj > threshold)))


def axial_scan(fieldmodel, drive: DriveParams, ion: IonSpecies,
               voltages: VoltageSet, center_um, *, halfspan_um: float,
               samples: int = 201, direction=(1.0, 0.0, 0.0)):
    """Total energy (eV) sampled along a line through ``center_um``.

    Returns (offsets µm, energies eV).  Default direction is the trap
    axis; used to build sampled axial potentials for ion chains.
    """
    if samples < 4:
        raise InvalidParams("need at least 4 samples")
    eff = EffectivePotential(fieldmodel, drive, ion, voltages)
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    s = np.linspace(-halfspan_um, halfspan_um, samples)
    pts = np.asarray(center_um, dtype=float)[None, :] + s[:, None] * d[None, :]
    return s, eff.energy(pts)
