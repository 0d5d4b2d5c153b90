"""Micromotion compensation: control voltages nulling the static field.

The constraint system is linear in the control voltages: three static
field components at the RF null, one axial-curvature row, plus optional
extra field probe points.  Underdetermined systems are resolved by the
minimum-Euclidean-norm least-squares solution (SVD semantics, singular
values below 1e-10 of the largest treated as zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import elementary_charge

from .errors import DegenerateSystem, InvalidParams, OutsideDomain
from .pseudopotential import DriveParams, IonSpecies, VoltageSet

__all__ = [
    "ConstraintSpec",
    "ConstraintSystem",
    "CompensationResult",
    "build_constraint_system",
    "solve_voltages",
    "residual_diagnostics",
    "Diagnostics",
]

_SV_CUTOFF = 1e-10
VOLTAGE_WARN_LIMIT = 10.0


@dataclass(frozen=True)
class ConstraintSpec:
    """Targets for the compensation solve.

    ``target_axial_curvature`` is the desired static-potential curvature
    (V/m^2) along ``axial_direction`` at the null; use
    ``axial_curvature_for`` to derive it from a secular frequency.
    ``locked_voltages`` are held fixed and excluded from the unknowns.
    ``weights`` scales the rows (3 field + 1 curvature + 3 per extra
    point); scalar or per-row.
    """

    null_point: np.ndarray
    target_static_field: np.ndarray = field(default_factory=lambda: np.zeros(3))
    target_axial_curvature: float = 0.0
    axial_direction: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    locked_voltages: dict[str, float] = field(default_factory=dict)
    weights: float | np.ndarray = 1.0
    extra_points: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "null_point",
                           np.asarray(self.null_point, dtype=float))
        object.__setattr__(self, "target_static_field",
                           np.asarray(self.target_static_field, dtype=float))
        d = np.asarray(self.axial_direction, dtype=float)
        object.__setattr__(self, "axial_direction", d / np.linalg.norm(d))
        object.__setattr__(self, "extra_points",
                           tuple(np.asarray(p, dtype=float) for p in self.extra_points))
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if np.any(w <= 0.0):
            raise InvalidParams("constraint weights must be > 0")

    @property
    def n_rows(self) -> int:
        return 4 + 3 * len(self.extra_points)

    def row_weights(self) -> np.ndarray:
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if w.size == 1:
            return np.full(self.n_rows, w[0])
        if w.size != self.n_rows:
            raise InvalidParams(f"expected {self.n_rows} weights, got {w.size}")
        return w


def axial_curvature_for(ion: IonSpecies, frequency_hz: float) -> float:
    """Static curvature (V/m^2) giving the requested axial frequency."""
    omega = 2.0 * np.pi * frequency_hz
    return ion.mass_kg * omega ** 2 / ion.charge_coulomb


@dataclass(frozen=True)
class ConstraintSystem:
    matrix: np.ndarray          # weighted rows
    rhs: np.ndarray
    electrodes: tuple[str, ...]  # column order (free electrodes)
    locked: dict[str, float]
    rf_names: tuple[str, ...]


@dataclass(frozen=True)
class CompensationResult:
    voltages: VoltageSet
    residual: np.ndarray
    rank: int
    null_space_dim: int
    null_space: np.ndarray      # (n_free, null_space_dim) orthonormal
    electrodes: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def solution(self) -> np.ndarray:
        return np.array([self.voltages.control[n] for n in self.electrodes])

    def as_dict(self) -> dict:
        return {
            "voltages": {n: self.voltages.control[n]
                         for n in sorted(self.voltages.control)},
            "rf_assignment": list(self.voltages.rf_assignment),
            "residual": list(self.residual),
            "rank": self.rank,
            "null_space_dim": self.null_space_dim,
            "warnings": list(self.warnings),
        }


def build_constraint_system(fieldmodel, spec: ConstraintSpec) -> ConstraintSystem:
    """Assemble the weighted linear system A v = b over free control
    electrodes (per-volt field and curvature responses)."""
    p = spec.null_point
    if p[2] <= 0.0:
        raise OutsideDomain("null point must lie above the electrode plane")
    free = [n for n in fieldmodel.control_names if n not in spec.locked_voltages]
    pts = [p, *spec.extra_points]
    for x in spec.extra_points:
        if x[2] <= 0.0:
            raise OutsideDomain("probe point must lie above the electrode plane")
    pts = np.asarray(pts, dtype=float)

    n_rows = spec.n_rows
    A = np.zeros((n_rows, len(free)))
    d = spec.axial_direction
    for j, name in enumerate(free):
        _, e, h = fieldmodel.weighted({name: 1.0}).evaluate(pts)
        A[0:3, j] = e[0]
        A[3, j] = d @ h[0] @ d
        for k in range(len(spec.extra_points)):
            A[4 + 3 * k: 7 + 3 * k, j] = e[1 + k]

    b = np.zeros(n_rows)
    b[0:3] = spec.target_static_field
    b[3] = spec.target_axial_curvature
    # extra probe rows target zero field
    if spec.locked_voltages:
        _, e, h = fieldmodel.weighted(dict(spec.locked_voltages)).evaluate(pts)
        b[0:3] -= e[0]
        b[3] -= d @ h[0] @ d
        for k in range(len(spec.extra_points)):
            b[4 + 3 * k: 7 + 3 * k] -= e[1 + k]

    w = spec.row_weights()
    return ConstraintSystem(matrix=A * w[:, None], rhs=b * w,
                            electrodes=tuple(free),
                            locked=dict(spec.locked_voltages),
                            rf_names=tuple(fieldmodel.rf_names))


def solve_voltages(system: ConstraintSystem) -> CompensationResult:
    """Minimum-norm least-squares solution of the constraint system."""
    A, b = system.matrix, system.rhs
    if A.size == 0 or not np.any(A):
        raise DegenerateSystem("constraint matrix is identically zero")
    U, s, Vt = np.linalg.svd(A, full_matrices=True)
    keep = s > _SV_CUTOFF * s[0]
    rank = int(np.count_nonzero(keep))
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    x = Vt.T[:, : s.size] @ (inv * (U.T[: s.size] @ b))
    residual = A @ x - b
    n_free = A.shape[1]
    null_dim = n_free - rank
    null_basis = Vt[rank:].T if null_dim else np.zeros((n_free, 0))

    volts = dict(system.locked)
    volts.update({n: float(v) for n, v in zip(system.electrodes, x)})
    warnings = tuple(
        f"|{n}| = {abs(v):.3g} V exceeds {VOLTAGE_WARN_LIMIT:.0f} V"
        for n, v in volts.items() if abs(v) > VOLTAGE_WARN_LIMIT)
    return CompensationResult(
        voltages=VoltageSet(control=volts, rf_assignment=system.rf_names),
        residual=residual, rank=rank, null_space_dim=null_dim,
        null_space=null_basis, electrodes=system.electrodes,
        warnings=warnings)


@dataclass(frozen=True)
class Diagnostics:
    static_field: np.ndarray      # V/m at the null
    axial_curvature: float        # V/m^2 along the axial direction
    axial_frequency_hz: float     # magnitude; imaginary if anti-trapping
    anti_trapping: bool

    def as_dict(self) -> dict:
        return {
            "static_field_v_per_m": list(self.static_field),
            "axial_curvature_v_per_m2": self.axial_curvature,
            "axial_frequency_hz": self.axial_frequency_hz,
            "anti_trapping": self.anti_trapping,
        }


def residual_diagnostics(fieldmodel, drive: DriveParams, ion: IonSpecies,
                         voltages: VoltageSet, null_point, *,
                         axial_direction=(1.0, 0.0, 0.0)) -> Diagnostics:
    """Forward check of a voltage set: static field and curvature at the
    null, and the axial frequency the static curvature implies.

    A negative curvature is reported with the anti-trapping flag set and
    the magnitude of the (imaginary) frequency.
    """
    voltages.validate_against(fieldmodel)
    p = np.asarray(null_point, dtype=float).reshape(1, 3)
    d = np.asarray(axial_direction, dtype=float)
    d = d / np.linalg.norm(d)
    if not voltages.control:
        e0 = np.zeros(3)
        curv = 0.0
    else:
        _, e, h = fieldmodel.weighted(dict(voltages.control)).evaluate(p)
        e0 = e[0]
        curv = float(d @ h[0] @ d)
    omega2 = ion.charge_coulomb * curv / ion.mass_kg
    freq = float(np.sqrt(abs(omega2)) / (2.0 * np.pi))
    return Diagnostics(static_field=e0, axial_curvature=curv,
                       axial_frequency_hz=freq, anti_trapping=bool(omega2 < 0.0))
