"""Linear Coulomb crystals: equilibria, lengths and axial normal modes.

Positions are 1D coordinates along the trap axis in µm, energies in eV.
The axial potential is either harmonic (per-ion well) or a cubic-spline
interpolant of sampled energies (e.g. static plus the axial component of
the RF pseudopotential exported by the pseudopotential module).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.constants import elementary_charge, epsilon_0
from scipy.interpolate import CubicSpline

from .errors import (InvalidFrequency, InvalidParams, NoConvergence,
                     Unbounded, UnstableChain)
from .pseudopotential import IonSpecies

__all__ = [
    "HarmonicPotential",
    "SampledPotential",
    "IonChain",
    "NormalModes",
    "length_scale",
    "equilibrium_positions",
    "normal_modes",
    "crystal_length",
    "mode_spectrum_scan",
]

_EV = elementary_charge
# e^2/(4 pi eps0) in eV*µm: Coulomb energy of two unit charges 1 µm apart
COULOMB_EV_UM = elementary_charge / (4.0 * np.pi * epsilon_0) * 1e6

GRAD_TOL = 1e-12  # eV/µm; spec requires <= 1e-9


@dataclass(frozen=True)
class HarmonicPotential:
    """Harmonic axial well, angular frequency in rad/s."""

    omega_z: float

    def __post_init__(self):
        if not (self.omega_z > 0.0):
            raise InvalidFrequency("harmonic axial frequency must be > 0")

    @classmethod
    def from_frequency(cls, frequency_hz: float) -> "HarmonicPotential":
        return cls(omega_z=2.0 * np.pi * frequency_hz)

    def energy(self, s_um, ion: IonSpecies):
        s = np.asarray(s_um, dtype=float) * 1e-6
        return 0.5 * ion.mass_kg * self.omega_z ** 2 * s * s / _EV

    def grad(self, s_um, ion: IonSpecies):
        s = np.asarray(s_um, dtype=float) * 1e-6
        return ion.mass_kg * self.omega_z ** 2 * s / _EV * 1e-6

    def curvature(self, s_um, ion: IonSpecies):
        c = ion.mass_kg * self.omega_z ** 2 / _EV * 1e-12
        return np.full_like(np.asarray(s_um, dtype=float), c)

    def minimum(self) -> float:
        return 0.0

    def domain(self):
        return (-np.inf, np.inf)


@dataclass(frozen=True)
class SampledPotential:
    """Cubic-spline axial potential from sampled energies (µm, eV).

    Requires at least 4 strictly increasing positions and a unique
    interior minimum of the interpolant.
    """

    positions: np.ndarray
    energies: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.positions, dtype=float)
        u = np.asarray(self.energies, dtype=float)
        if s.size < 4:
            raise InvalidParams("sampled potential needs >= 4 points")
        if np.any(np.diff(s) <= 0.0):
            raise InvalidParams("sample positions must be strictly increasing")
        if s.shape != u.shape:
            raise InvalidParams("positions and energies must have equal length")
        object.__setattr__(self, "positions", s)
        object.__setattr__(self, "energies", u)
        dense = np.linspace(s[0], s[-1], max(4 * s.size, 512))
        vals = self._spline(dense)
        interior = vals[1:-1]
        minima = np.nonzero((interior < vals[:-2]) & (interior <= vals[2:]))[0]
        if minima.size != 1:
            raise InvalidParams(
                f"sampled potential must have a unique interior minimum, found {minima.size}")
        object.__setattr__(self, "_min_guess", float(dense[1 + minima[0]]))

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.positions, self.energies)

    def energy(self, s_um, ion: IonSpecies):
        return self._spline(np.asarray(s_um, dtype=float))

    def grad(self, s_um, ion: IonSpecies):
        return self._spline(np.asarray(s_um, dtype=float), 1)

    def curvature(self, s_um, ion: IonSpecies):
        return self._spline(np.asarray(s_um, dtype=float), 2)

    def minimum(self) -> float:
        s = self._min_guess
        for _ in range(100):
            g = self._spline(s, 1)
            c = self._spline(s, 2)
            if c <= 0.0:
                break
            step = -g / c
            s = float(np.clip(s + step, self.positions[0], self.positions[-1]))
            if abs(step) < 1e-12:
                break
        return s

    def domain(self):
        return (float(self.positions[0]), float(self.positions[-1]))


@dataclass(frozen=True)
class IonChain:
    species: IonSpecies
    positions: np.ndarray        # µm, strictly increasing
    potential: HarmonicPotential | SampledPotential
    grad_norm: float             # max |dU/ds_i| at the solution, eV/µm

    def __post_init__(self):
        p = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", p)

    def __len__(self):
        return self.positions.size


@dataclass(frozen=True)
class NormalModes:
    frequencies_hz: np.ndarray   # ascending
    eigenvectors: np.ndarray     # columns match frequencies, orthonormal


def length_scale(ion: IonSpecies, omega_z: float) -> float:
    """Chain length scale l (µm): l^3 = (Z e)^2 / (4 pi eps0 m omega^2)."""
    if not (omega_z > 0.0):
        raise InvalidFrequency("omega_z must be > 0")
    l3 = (ion.charge_coulomb ** 2 / (4.0 * np.pi * epsilon_0)
          / (ion.mass_kg * omega_z ** 2))
    return float(l3 ** (1.0 / 3.0)) * 1e6


def _chain_energy(potential, ion, s):
    u = float(np.sum(potential.energy(s, ion)))
    d = s[:, None] - s[None, :]
    iu = np.triu_indices(len(s), k=1)
    u += float(np.sum(COULOMB_EV_UM * ion.charge ** 2 / np.abs(d[iu])))
    return u


def _chain_grad_hess(potential, ion, s):
    n = s.size
    g = np.asarray(potential.grad(s, ion), dtype=float).copy()
    hd = np.asarray(potential.curvature(s, ion), dtype=float).copy()
    H = np.zeros((n, n))
    Z2 = ion.charge ** 2
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            d = s[i] - s[j]
            g[i] -= COULOMB_EV_UM * Z2 * np.sign(d) / d ** 2
            c = 2.0 * COULOMB_EV_UM * Z2 / abs(d) ** 3
            H[i, j] = -c
            hd[i] += c
    H[np.arange(n), np.arange(n)] = hd
    return g, H


def _effective_length_scale(potential, ion) -> float:
    if isinstance(potential, HarmonicPotential):
        return length_scale(ion, potential.omega_z)
    c = float(potential.curvature(potential.minimum(), ion))  # eV/µm^2
    if c <= 0.0:
        lo, hi = potential.domain()
        return max((hi - lo) / 8.0, 1.0)
    omega = np.sqrt(c * _EV * 1e12 / ion.mass_kg)
    return length_scale(ion, omega)


def equilibrium_positions(ion: IonSpecies, potential, n: int, *,
                          restarts: int = 6, max_iter: int = 400) -> IonChain:
    """Equilibrium positions of an n-ion chain by damped Newton iteration.

    Ions are seeded equispaced over +- n^0.6 * l around the potential
    minimum; on failure the solver restarts with deterministic jitter.
    Solutions leaving a sampled potential's domain raise Unbounded.
    """
    if n < 1:
        raise InvalidParams("need at least one ion")
    lo, hi = potential.domain()
    center = potential.minimum()
    l = _effective_length_scale(potential, ion)

    for attempt in range(restarts):
        spread = l * n ** 0.6
        s = center + (np.linspace(-0.5, 0.5, n) * spread if n > 1 else np.zeros(1))
        if attempt > 0:
            rng = np.random.default_rng(attempt)
            s = np.sort(s + rng.normal(scale=0.05 * l * attempt, size=n))
        ok = True
        for _ in range(max_iter):
            g, H = _chain_grad_hess(potential, ion, s)
            if np.abs(g).max() < GRAD_TOL:
                break
            lam = 0.0
            step = None
            for _ in range(60):
                try:
                    c, low = np.linalg.eigh(H + lam * np.eye(n))
                    if c.min() <= 0.0:
                        raise np.linalg.LinAlgError
                    step = np.linalg.solve(H + lam * np.eye(n), -g)
                    break
                except np.linalg.LinAlgError:
                    lam = max(10.0 * lam, 1e-9 * max(abs(H).max(), 1.0))
            if step is None:
                ok = False
                break
            if n > 1:
                limit = 0.3 * np.diff(s).min()
                scale = min(1.0, limit / (np.abs(step).max() + 1e-300))
            else:
                scale = min(1.0, 10.0 / (np.abs(step).max() + 1e-300))
            s = np.sort(s + scale * step)
            if s[0] < lo or s[-1] > hi:
                raise Unbounded("chain leaves the sampled potential domain; "
                                "potential is not confining for this chain")
        g, _ = _chain_grad_hess(potential, ion, s)
        if ok and np.abs(g).max() < GRAD_TOL:
            return IonChain(species=ion, positions=s, potential=potential,
                            grad_norm=float(np.abs(g).max()))
    raise NoConvergence(f"chain equilibrium failed after {restarts} restarts")


def normal_modes(chain: IonChain) -> NormalModes:
    """Axial normal modes from the mass-weighted Hessian at equilibrium."""
    s = chain.positions
    _, H = _chain_grad_hess(chain.potential, chain.species, s)
    H_J = H * _EV * 1e12          # eV/µm^2 -> J/m^2
    ew, ev = np.linalg.eigh(H_J / chain.species.mass_kg)
    if np.any(ew <= 0.0):
        raise UnstableChain(f"indefinite chain Hessian, min eigenvalue {ew.min():.3g}")
    freqs = np.sqrt(ew) / (2.0 * np.pi)
    for i in range(ev.shape[1]):
        j = int(np.argmax(np.abs(ev[:, i])))
        if ev[j, i] < 0.0:
            ev[:, i] = -ev[:, i]
    return NormalModes(frequencies_hz=freqs, eigenvectors=ev)


def crystal_length(chain: IonChain) -> float:
    """End-to-end chain extent (µm); zero for a single ion."""
    return float(chain.positions.max() - chain.positions.min())


def mode_spectrum_scan(chain: IonChain, drive_frequencies_hz, *,
                       linewidth: float = 0.01) -> list[bool]:
    """Flag drive frequencies within ``linewidth`` (relative) of any
    normal-mode frequency.  Models frequency matching only."""
    modes = normal_modes(chain).frequencies_hz
    out = []
    for f in drive_frequencies_hz:
        out.append(bool(np.any(np.abs(modes - f) <= linewidth * modes)))
    return out
