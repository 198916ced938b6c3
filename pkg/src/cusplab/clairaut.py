"""Clairaut reduction of the boundary value problem for ``dr^2 + r^6 dtheta^2``.

Along a unit-speed geodesic ``c = r^6 theta'`` is constant.  Writing
``c = r_m^3`` with ``r_m`` the turning radius, the winding and length of a
monotone radial stretch ``[a, b]`` are

    W = int_a^b (c / r^6) / sqrt(q) dr,   L = int_a^b 1 / sqrt(q) dr,

with ``q = 1 - (r_m / r)^6``.  A geodesic either moves monotonically in r
(``r_m <= r_lo``) or dips to ``r_m`` and comes back, which adds the stretch
``[r_m, r_lo]`` twice.  Working with ``r_m`` instead of ``c`` keeps
``q >= 0`` exact; ``q`` itself is evaluated from the distance to ``r_m`` to
avoid cancellation at the turning point.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import InputError, SolverError
from .quadrature import tanh_sinh

__all__ = ["ClairautSolution", "stretch_integrals", "winding", "solve", "trajectory"]

_TOL = 1e-14
R_MIN = 1e-50


class ClairautSolution(NamedTuple):
    r0: float
    r1: float
    dtheta: float
    rm: float  # turning radius, 0 for the radial segment
    c: float  # signed Clairaut constant r^6 theta'
    length: float
    turning: bool


def _q(rm, dist):
    # 1 - (rm / (rm + dist))^6
    return -np.expm1(-6.0 * np.log1p(dist / rm))


def _pieces(rm: float, a: float, b: float) -> list[tuple[float, float]]:
    # split next to a near-singular left end so both pieces are well resolved
    gap = a - rm
    if b - a > 16.0 * max(gap, 0.25 * rm):
        mid = a + 8.0 * max(gap, 0.25 * rm)
        return [(a, mid), (mid, b)]
    return [(a, b)]


def stretch_integrals(rm: float, a: float, b: float) -> tuple[float, float]:
    """Winding and length of the monotone stretch ``rm <= a <= r <= b``."""
    if b <= a:
        return 0.0, 0.0
    if rm <= 0.0:
        return 0.0, b - a
    c = rm**3
    wind = length = 0.0
    for lo, hi in _pieces(rm, a, b):
        off = lo - rm
        w, _ = tanh_sinh(lambda r, da, db: (c / r**6) / np.sqrt(_q(rm, off + da)), lo, hi, tol=_TOL)
        ell, _ = tanh_sinh(lambda r, da, db: 1.0 / np.sqrt(_q(rm, off + da)), lo, hi, tol=_TOL)
        wind += w
        length += ell
    return wind, length


def winding(rm: float, r0: float, r1: float, turning: bool) -> tuple[float, float]:
    """Total (winding, length) for turning radius ``rm`` on the chosen branch."""
    lo, hi = min(r0, r1), max(r0, r1)
    w, ell = stretch_integrals(rm, lo, hi)
    if turning:
        w2, ell2 = stretch_integrals(rm, rm, lo)
        w, ell = w + 2.0 * w2, ell + 2.0 * ell2
    return w, ell


def solve(r0: float, r1: float, dtheta: float) -> ClairautSolution:
    """Geodesic from ``(r0, .)`` to ``(r1, . + dtheta)`` in the universal cover."""
    if not (r0 > 0 and r1 > 0):
        raise InputError("Clairaut reduction needs r0, r1 > 0")
    if min(r0, r1) < R_MIN:
        # r^6 underflows below ~1e-54; such points are the cusp for every practical purpose
        raise InputError(f"radii below {R_MIN:g} are not resolved; use r = 0 for the cusp point")
    if not np.isfinite(dtheta):
        raise InputError("winding must be finite")
    W = abs(float(dtheta))
    sign = 1.0 if dtheta >= 0 else -1.0
    lo = min(r0, r1)
    if W == 0.0:
        return ClairautSolution(r0, r1, dtheta, 0.0, 0.0, abs(r1 - r0), False)

    w_star, ell_star = winding(lo, r0, r1, turning=False)
    if W <= w_star:
        if W == w_star:
            rm = lo
        else:
            rm = brentq(lambda x: winding(x, r0, r1, False)[0] - W, 0.0, lo, xtol=1e-16 * lo, rtol=1e-15, maxiter=200)
        turning = False
    else:
        f = lambda y: winding(lo * np.exp(-y), r0, r1, True)[0] - W  # noqa: E731
        y_hi = 1.0
        while f(y_hi) < 0:
            y_hi *= 2.0
            if y_hi > 80:
                raise SolverError("no bracket for the Clairaut constant", best=lo * np.exp(-y_hi))
        y = brentq(f, 0.0, y_hi, xtol=1e-15, rtol=1e-15, maxiter=200)
        rm = lo * np.exp(-y)
        turning = True
    length = winding(rm, r0, r1, turning)[1]
    return ClairautSolution(r0, r1, dtheta, rm, sign * rm**3, length, turning)


def _rhs(s, y):
    r, th, dr, dth = y
    return [dr, dth, 3.0 * r**5 * dth**2, -6.0 * dr * dth / r]


def trajectory(sol: ClairautSolution, theta0: float = 0.0, samples: int = 257, dense: bool = False):
    """Integrate the geodesic equations along a solved Clairaut problem.

    Returns ``(s, states)`` with ``states[:, i] = (r, theta, r', theta')`` at
    the unit-speed arclength samples ``s``; with ``dense=True`` the scipy
    dense-output interpolant is returned as a third item.
    """
    r0, r1, rm, L = sol.r0, sol.r1, sol.rm, sol.length
    if L == 0.0:
        s = np.zeros(samples)
        states = np.tile([[r0], [theta0], [0.0], [0.0]], (1, samples))
        return (s, states, None) if dense else (s, states)
    q0 = 1.0 if rm == 0.0 else _q(rm, r0 - rm)
    if sol.turning:
        direction = -1.0
    else:
        direction = 1.0 if r1 > r0 else -1.0
    y0 = [r0, theta0, direction * np.sqrt(max(q0, 0.0)), sol.c / r0**6]
    s = np.linspace(0.0, L, samples)
    res = solve_ivp(_rhs, (0.0, L), y0, method="DOP853", t_eval=s, rtol=1e-13, atol=1e-14, dense_output=dense)
    if not res.success:
        raise SolverError(f"Clairaut trajectory integration failed: {res.message}")
    return (s, res.y, res.sol) if dense else (s, res.y)
