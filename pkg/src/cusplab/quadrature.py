"""Tanh-sinh (double exponential) quadrature.

The integrand is called as ``f(x, da, db)`` where ``da = x - a`` and
``db = b - x`` are computed without cancellation.  Integrands with an
inverse-square-root singularity at an endpoint need those distances to
evaluate ``1 - (r_min / r)**6`` accurately next to the turning point.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import expit

__all__ = ["tanh_sinh", "gauss_legendre", "legendre_nodes"]

_T_MAX = 4.6  # (pi/2) sinh(4.6) ~ 78, so nodes reach ~1e-68 from the endpoints


@lru_cache(maxsize=None)
def _rule(level: int):
    h = 2.0 ** (-level)
    k = np.arange(-int(_T_MAX / h), int(_T_MAX / h) + 1)
    t = k * h
    u = 0.5 * np.pi * np.sinh(t)
    weights = h * 0.5 * np.pi * np.cosh(t) / np.cosh(u) ** 2
    # 1 + x and 1 - x for x = tanh(u), both free of cancellation
    return 2.0 * expit(2.0 * u), 2.0 * expit(-2.0 * u), weights


def tanh_sinh(
    f: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-14,
    min_level: int = 2,
    max_level: int = 9,
) -> tuple[float, float]:
    """Integrate ``f`` over ``[a, b]``.

    Halves the step until two successive estimates agree to ``tol``
    (relative, floored at absolute ``tol``).

    Returns
    -------
    (value, error_estimate)
    """
    if a == b:
        return 0.0, 0.0
    if b < a:
        value, err = tanh_sinh(lambda x, da, db: f(x, db, da), b, a, tol, min_level, max_level)
        return -value, err
    half = 0.5 * (b - a)
    previous = None
    value = 0.0
    err = np.inf
    for level in range(min_level, max_level + 1):
        plus, minus, w = _rule(level)
        da = half * plus
        db = half * minus
        x = np.where(da <= db, a + da, b - db)
        value = half * float(np.sum(w * f(x, da, db)))
        if previous is not None:
            err = abs(value - previous)
            if err <= tol * max(1.0, abs(value)):
                break
        previous = value
    return value, err


@lru_cache(maxsize=None)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(f: Callable[[np.ndarray], np.ndarray], a: float, b: float, n: int = 64, panels: int = 1) -> float:
    """Composite Gauss-Legendre rule with ``panels`` equal panels of ``n`` nodes."""
    x, w = _legendre(n)
    edges = np.linspace(a, b, panels + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return float(np.sum(weights * f(nodes)))


def legendre_nodes(edges, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Flattened composite Gauss-Legendre nodes and weights over the given panel edges."""
    x, w = _legendre(n)
    edges = np.asarray(edges, dtype=float)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()
