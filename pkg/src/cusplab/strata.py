"""Stratified structure of the model chart.

The label of a point is the set of cusp factors sitting at their cusp
point (``r_k = 0``), indexed from 1.  Lengths of pinched curves are
modelled through plumbing parameters: ``r = (-log|t|)^(-1/2)``,
``ell = 2 pi^2 / (-log|t|)`` and ``varrho^2 = 4 pi^3 / (-log|t|)``, so that
``varrho = (2 pi ell)^(1/2) = 2 pi^(3/2) r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import InputError, SingularPointError, SolverError
from .geodesics import Curve, distance, energy_connect
from .metrics import ChartPoint, MetricModel, PerturbedProduct, ProductCuspidal, TangentVector

__all__ = [
    "SNAP",
    "StratumLabel",
    "LengthProxy",
    "label",
    "snap",
    "label_trace",
    "LabelTrace",
    "stratum_distance",
    "lambda_value",
    "grad_lambda",
    "integral_curve_probe",
    "refraction_experiment",
    "corner_experiment",
    "loglog_slope",
    "perturbation_scaling_probe",
]

SNAP = 1e-9
TWO_PI_32 = 2.0 * np.pi**1.5


class StratumLabel(frozenset):
    """Set of 1-based cusp indices with ``r_k = 0``; ordered by inclusion."""

    def precedes(self, other: "StratumLabel") -> bool:
        return self <= other

    def __repr__(self):
        return "{" + ",".join(str(k) for k in sorted(self)) + "}"


@dataclass(frozen=True)
class LengthProxy:
    """Plumbing-parameter relations for a single pinched curve."""

    t: complex

    def __post_init__(self):
        if not 0 < abs(self.t) < 1:
            raise InputError("plumbing parameter needs 0 < |t| < 1")

    @property
    def L(self) -> float:
        return -np.log(abs(self.t))

    @property
    def r(self) -> float:
        return self.L ** -0.5

    @property
    def ell(self) -> float:
        return 2.0 * np.pi**2 / self.L

    @property
    def varrho(self) -> float:
        return np.sqrt(4.0 * np.pi**3 / self.L)

    @property
    def lam(self) -> float:
        return np.sqrt(2.0 * np.pi * self.ell)

    @classmethod
    def from_r(cls, r: float) -> "LengthProxy":
        if not r > 0:
            raise InputError("r must be positive")
        return cls(np.exp(-1.0 / r**2))


def _vector(model: MetricModel, p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return model.vector(p)
    return np.asarray(p, dtype=float)


def label(p, model: MetricModel | None = None) -> StratumLabel:
    """Exact-zero label ``{k : r_k = 0}``."""
    r = p.r if isinstance(p, ChartPoint) else np.asarray(p, float)[model.r_slice]
    return StratumLabel(int(k) + 1 for k in np.flatnonzero(r == 0.0))


def snap(model: MetricModel, q: np.ndarray, tol: float = SNAP) -> np.ndarray:
    q = np.array(q, dtype=float)
    r = q[..., model.r_slice]
    q[..., model.r_slice] = np.where(r < tol, 0.0, r)
    return q


class LabelTrace(NamedTuple):
    runs: list  # (t_start, t_end, StratumLabel)
    expected_interior: StratumLabel
    refracting: bool  # interior label differs from Lambda(p) & Lambda(q)


def label_trace(curve: Curve, tol: float = SNAP) -> LabelTrace:
    """Run-length encoding of the label along the samples of ``curve``.

    Interior samples of a minimizer carry ``Lambda(p) & Lambda(q)``; any
    other interior label flags the curve as a non-minimizing candidate.
    """
    model = curve.model
    pts = snap(model, curve.points, tol)
    labels = [label(q, model) for q in pts]
    runs = []
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append((float(curve.t[start]), float(curve.t[i - 1]), labels[start]))
            start = i
    expected = StratumLabel(labels[0] & labels[-1])
    refracting = any(lab != expected for lab in labels[1:-1])
    return LabelTrace(runs, expected, refracting)


def _parse_sigma(model: MetricModel, sigma) -> list[int]:
    idx = sorted(int(k) for k in sigma)
    if not idx:
        raise InputError("stratum label must be nonempty")
    if idx[0] < 1 or idx[-1] > model.n:
        raise InputError(f"stratum indices must lie in 1..{model.n}")
    return [k - 1 for k in idx]


def stratum_distance(model: MetricModel, p, sigma: Sequence[int], strategy: str = "auto", **options) -> float:
    """Distance from ``p`` to the closed stratum ``{r_k = 0 for k in sigma}``.

    In a pure product the radial projection is the minimizer and the value
    is ``2 sqrt(s) (sum_{k in sigma} r_k^2)^(1/2)``.  Otherwise the energy
    solver runs with a free endpoint constrained to the stratum.
    """
    q = _vector(model, p)
    ks = _parse_sigma(model, sigma)
    r = q[model.r_slice]
    if np.all(r[ks] == 0.0):
        return 0.0
    if strategy == "auto":
        strategy = "exact" if isinstance(model, ProductCuspidal) else "energy"
    if strategy == "exact":
        if not isinstance(model, ProductCuspidal):
            raise InputError("closed-form stratum distance needs a pure product")
        return float(2.0 * np.sqrt(model.scale) * np.sqrt(np.sum(r[ks] ** 2)))
    target = q.copy()
    free = np.ones(model.dim, bool)
    for k in ks:
        target[model.m2 + k] = 0.0
        free[model.m2 + k] = False
    curve = energy_connect(model, q, target, free_b=free, **options)
    return float(curve.length)


def lambda_value(r) -> np.ndarray:
    """``lambda = (2 pi ell)^(1/2) = 2 pi^(3/2) r``."""
    return TWO_PI_32 * np.asarray(r, dtype=float)


def grad_lambda(model: MetricModel, p, k: int) -> TangentVector:
    """Metric gradient ``g^{-1} d lambda_k`` (k is 1-based)."""
    q = _vector(model, p)
    if not 1 <= k <= model.n:
        raise InputError(f"cusp index must lie in 1..{model.n}")
    rk = model.m2 + k - 1
    if q[rk] <= 0:
        raise SingularPointError("grad lambda is undefined on the stratum")
    v = np.zeros(model.dim)
    v[rk] = TWO_PI_32 / model.diag(q)[rk]
    return TangentVector.from_vector(v, model.m2, model.n)


def inner(model: MetricModel, p, a: TangentVector, b: TangentVector) -> float:
    q = _vector(model, p)
    return float(np.sum(model.diag(q) * a.vector * b.vector))


class ProbeResult(NamedTuple):
    endpoint: np.ndarray
    length: float
    endpoint_distance: float


def integral_curve_probe(model: MetricModel, start, c: Sequence[float], distance_strategy: str = "auto") -> ProbeResult:
    """Time-one flow of ``v = -sum_k c_k grad lambda_k`` from ``start``.

    ``start`` must satisfy ``lambda_k(start) = c_k`` for every k with
    ``c_k > 0``.  Returns the endpoint, the metric length of the integral
    curve and the endpoint's distance to the stratum of the flowed factors.
    """
    q0 = _vector(model, start).copy()
    c = np.asarray(c, dtype=float)
    if c.shape != (model.n,) or np.any(c < 0) or not np.any(c > 0):
        raise InputError("coefficients must be nonnegative, one per cusp factor, not all zero")
    active = np.flatnonzero(c > 0)
    lam = lambda_value(q0[model.r_slice])
    if not np.allclose(lam[active], c[active], rtol=1e-12, atol=0):
        raise InputError("start point must satisfy lambda_k(start) = c_k")
    rs = model.r_slice

    def field(t, y):
        y = y[:-1]
        g = model.diag(y)
        v = np.zeros_like(y)
        r = y[rs]
        v[rs] = np.where(r > 0, -c * TWO_PI_32 / g[rs], 0.0)
        speed = np.sqrt(np.sum(g * v**2))
        return np.concatenate([v, [speed]])

    hit = lambda t, y: np.min(y[rs][active])  # noqa: E731
    hit.terminal = True
    hit.direction = -1
    res = solve_ivp(field, (0.0, 1.0), np.concatenate([q0, [0.0]]), method="DOP853", rtol=1e-12, atol=1e-14, events=hit)
    if res.status == -1:
        raise SolverError(f"integral curve failed: {res.message}")
    end = res.y[:-1, -1].copy()
    r_end = end[rs]
    # the pure product lands on the stratum at t = 1 up to integration round-off
    r_end[np.abs(r_end) < 1e-11 * q0[rs]] = 0.0
    end[rs] = np.maximum(r_end, 0.0)
    length = float(res.y[-1, -1])
    d = stratum_distance(model, end, active + 1, strategy=distance_strategy)
    return ProbeResult(end, length, d)


# ---------------------------------------------------------------------------
# refraction and corners


class RefractionResult(NamedTuple):
    through: float
    shortcut: float
    gap: float
    strict: bool


def refraction_experiment(model: ProductCuspidal, a, b, o, strategy: str = "auto") -> RefractionResult:
    """Compare the broken path ``a -> o -> b`` with the product shortcut.

    ``a`` has exactly one positive radial coordinate; ``b`` and ``o`` lie on
    the stratum.  The shortcut moves the Euclidean block along the segment
    ``a_x -> b_x`` while the cusp factor runs radially into its cusp at
    constant speed, with length ``(|a_x - b_x|^2 + varrho_a^2)^(1/2)``.
    """
    if not isinstance(model, ProductCuspidal) or model.m < 1:
        raise InputError("refraction needs a product with a Euclidean block")
    qa, qb, qo = _vector(model, a), _vector(model, b), _vector(model, o)
    ra = qa[model.r_slice]
    if np.count_nonzero(ra > 0) != 1:
        raise InputError("a must have exactly one positive radial coordinate")
    if np.any(qb[model.r_slice] != 0) or np.any(qo[model.r_slice] != 0):
        raise InputError("b and o must lie on the stratum")
    ax, bx, ox = qa[: model.m2], qb[: model.m2], qo[: model.m2]
    if np.array_equal(ax, ox) and np.array_equal(ox, bx):
        raise InputError("degenerate configuration a_x = o = b")
    through = distance(model, qa, qo, strategy) + distance(model, qo, qb, strategy)
    varrho = stratum_distance(model, qa, [int(np.flatnonzero(ra > 0)[0]) + 1])
    shortcut = float(np.hypot(np.linalg.norm(ax - bx), varrho))
    gap = through - shortcut
    return RefractionResult(through, shortcut, gap, bool(gap > 0) if varrho > 0 else bool(gap >= -1e-12))


def shortcut_curve(model: ProductCuspidal, a, b, samples: int = 257) -> Curve:
    """The comparison curve: straight in x, radial at constant speed in the cusp factor."""
    qa, qb = _vector(model, a), _vector(model, b)
    f = np.linspace(0.0, 1.0, samples)[:, None]
    pts = qa + f * (qb - qa)
    pts[:, model.theta_slice] = qa[model.theta_slice]
    return Curve(model, f[:, 0], pts, True, None, None, "shortcut")


def broken_curve(model: ProductCuspidal, a, o, b, samples: int = 257) -> Curve:
    """Chart polyline ``a -> o -> b`` used as the refracting candidate."""
    qa, qo, qb = _vector(model, a), _vector(model, o), _vector(model, b)
    f = np.linspace(0.0, 1.0, samples)[:, None]
    first = qa + f * (qo - qa)
    first[:, model.theta_slice] = qa[model.theta_slice]
    second = qo + f[1:] * (qb - qo)
    pts = np.concatenate([first, second])
    t = np.linspace(0.0, 1.0, pts.shape[0])
    return Curve(model, t, pts, False, None, None, "broken")


class CornerResult(NamedTuple):
    through: float
    direct: float
    gap: float


def corner_experiment(model: ProductCuspidal, a_minus, a_plus, strategy: str = "auto") -> CornerResult:
    """Path through the common cusp point versus the direct geodesic.

    ``a_minus`` sits on factor 1 only (``r_2 = 0``), ``a_plus`` on factor 2
    only (``r_1 = 0``); both share the Euclidean block.
    """
    if not isinstance(model, ProductCuspidal) or model.n < 2:
        raise InputError("corner experiment needs at least two cusp factors")
    qm, qp = _vector(model, a_minus), _vector(model, a_plus)
    rm, rp = qm[model.r_slice], qp[model.r_slice]
    if not (rm[0] > 0 and np.all(rm[1:] == 0) and rp[1] > 0 and rp[0] == 0 and np.all(rp[2:] == 0)):
        raise InputError("a_minus must lie on factor 1 only and a_plus on factor 2 only, both off the origin")
    if not np.array_equal(qm[: model.m2], qp[: model.m2]):
        raise InputError("a_minus and a_plus must share the Euclidean block")
    origin = qm.copy()
    origin[model.r_slice] = 0.0
    through = distance(model, qm, origin, strategy) + distance(model, origin, qp, strategy)
    direct = distance(model, qm, qp, strategy)
    return CornerResult(through, direct, through - direct)


# ---------------------------------------------------------------------------
# scaling probes


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 3:
        raise InputError("slope fits need at least three grid points")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


class ScalingProbe(NamedTuple):
    r: np.ndarray
    distance_deviation: np.ndarray
    ratio_deviation: np.ndarray
    distance_slope: float
    ratio_slope: float
    exact: bool


def perturbation_scaling_probe(
    model: PerturbedProduct,
    r_grid: Sequence[float],
    x=None,
    theta=None,
    floor: float = 1e-13,
) -> ScalingProbe:
    """Fit the orders of the perturbation remainders on a radial grid.

    (i) ``|d(p, stratum) - (2 pi ell)^(1/2)|`` with the perturbed distance
    from the energy solver, and (ii) ``max_i |g_ii / g0_ii - 1|``; points on
    the grid share ``x`` and ``theta`` and use the first cusp factor.
    """
    if not isinstance(model, PerturbedProduct):
        raise InputError("scaling probe needs a PerturbedProduct")
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size < 3 or r_grid.max() / r_grid.min() < 10.0 * (1 - 1e-12):
        raise InputError("grid must have at least three points spanning one decade")
    x = np.zeros(model.m2) + 0.3 if x is None else np.asarray(x, float)
    theta = np.full(model.n, 0.7) if theta is None else np.asarray(theta, float)
    base = model.base
    dist_dev, ratio_dev = [], []
    for r in r_grid:
        rr = np.zeros(model.n)
        rr[0] = r
        q = np.concatenate([x, rr, theta])
        lam = np.sqrt(base.scale / np.pi**3) * lambda_value(r)  # (2 pi ell)^(1/2) in the scaled product
        dist_dev.append(abs(stratum_distance(model, q, [1], tol=1e-12) - lam))
        ratio_dev.append(float(np.max(np.abs(model.diag(q) / base.diag(q) - 1.0))))
    dist_dev, ratio_dev = np.array(dist_dev), np.array(ratio_dev)
    exact = bool(np.all(dist_dev < floor * 1e3) and np.all(ratio_dev < floor))
    if exact:
        return ScalingProbe(r_grid, dist_dev, ratio_dev, float("nan"), float("nan"), True)
    return ScalingProbe(r_grid, dist_dev, ratio_dev, loglog_slope(r_grid, dist_dev), loglog_slope(r_grid, ratio_dev), False)
