"""Floquet analysis of the Mathieu equation  y'' + (a - 2 q cos 2t) y = 0.

The monodromy matrix over one period t in [0, pi] decides stability:
|trace M| < 2 is stable (bounded motion).  The first stability region at
a = 0 closes at |q| = MATHIEU_Q_EDGE; the packaged constant is verified
against the integrator rather than trusted (see tests).
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

__all__ = [
    "MATHIEU_Q_EDGE",
    "monodromy",
    "is_stable",
    "characteristic_exponent",
    "secular_frequency",
    "stability_edge",
]

# first-region boundary at a = 0, standard value
MATHIEU_Q_EDGE = 0.908


def _rhs(t, y, a, q):
    return [y[1], -(a - 2.0 * q * np.cos(2.0 * t)) * y[0]]


def monodromy(a: float, q: float, rtol: float = 1e-11, atol: float = 1e-12) -> np.ndarray:
    """Fundamental solution matrix of the Mathieu equation over one period."""
    M = np.empty((2, 2))
    for col, y0 in enumerate(([1.0, 0.0], [0.0, 1.0])):
        sol = solve_ivp(_rhs, (0.0, np.pi), y0, args=(a, q), method="DOP853",
                        rtol=rtol, atol=atol, dense_output=False)
        M[:, col] = sol.y[:, -1]
    return M


def is_stable(a: float, q: float) -> bool:
    """Bounded motion per direct Floquet integration (|trace| < 2)."""
    return bool(abs(np.trace(monodromy(a, q))) < 2.0)


def characteristic_exponent(a: float, q: float) -> float:
    """Floquet exponent beta in (0, 1) for a stable operating point;
    the secular frequency is beta * Omega / 2."""
    tr = np.trace(monodromy(a, q))
    if abs(tr) >= 2.0:
        raise ValueError(f"unstable operating point a={a}, q={q}")
    return float(np.arccos(tr / 2.0) / np.pi)


def secular_frequency(a: float, q: float, omega_rf: float) -> float:
    """Exact (Floquet) secular angular frequency for one axis, rad/s."""
    return characteristic_exponent(a, q) * omega_rf / 2.0


def stability_edge(a: float = 0.0, lo: float = 0.5, hi: float = 1.5,
                   tol: float = 1e-6) -> float:
    """First-region boundary q*(a) located by bisection on the Floquet
    stability verdict."""
    if not is_stable(a, lo):
        raise ValueError("lower bracket already unstable")
    if is_stable(a, hi):
        raise ValueError("upper bracket stable; widen the bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_stable(a, mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
