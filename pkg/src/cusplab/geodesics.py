"""Geodesic engine: curve length, the geodesic ODE, boundary value problems.

Three connection strategies are available.

``exact``
    Product reduction.  Euclidean factors are straight lines, the sphere uses
    great circles and every cusp factor is solved through the Clairaut
    reduction (``s (4 dr^2 + r^6 dtheta^2)`` is isometric to
    ``s (du^2 + u^6 dphi^2)`` with ``u = 2r``, ``phi = theta / 8``).
``energy``
    Discrete Dirichlet energy of a polyline, minimized by a damped Newton
    iteration on the block tridiagonal Hessian, refined by doubling with a
    Richardson estimate of the length.
``shooting``
    Newton-type root finding on the initial velocity of the geodesic ODE,
    seeded by the energy solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.linalg import solveh_banded
from scipy.optimize import root

from . import clairaut
from .errors import InputError, SingularApproachError, SolverError
from .metrics import (
    ChartPoint,
    EuclideanBlock,
    MetricModel,
    PerturbedProduct,
    ProductCuspidal,
    SpherePatch,
    TangentVector,
)

__all__ = [
    "Curve",
    "ShootingResult",
    "segment_lengths",
    "curve_length",
    "curve_length_estimate",
    "partition_length_check",
    "integrate_geodesic",
    "clairaut_constants",
    "speeds",
    "connect",
    "distance",
    "exact_available",
    "energy_connect",
    "shoot",
    "second_variation_check",
    "sup_distance",
]

R_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class Curve:
    """A sampled curve in the flat chart of ``model``.

    ``points[i]`` is the coordinate vector at parameter ``t[i]``.  When an
    ``evaluator`` is present it maps parameter fractions in [0, 1] to
    coordinate vectors exactly (up to ODE accuracy); otherwise ``at``
    interpolates linearly between samples.
    """

    model: MetricModel
    t: np.ndarray
    points: np.ndarray
    arclength: bool = False
    length: Optional[float] = None
    velocities: Optional[np.ndarray] = None
    termination: str = ""
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.model.dim or pts.shape[0] != t.size:
            raise InputError("curve samples do not match the model dimension")
        if not np.all(np.isfinite(pts)):
            raise InputError("curve samples must be finite")
        if np.any(np.diff(t) < 0):
            raise InputError("curve parameters must be nondecreasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "points", pts)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def chart_point(self, i: int) -> ChartPoint:
        return self.model.to_point(self.points[i])

    def at(self, fraction) -> np.ndarray:
        """Coordinates at parameter fraction(s) in [0, 1]."""
        f = np.clip(np.asarray(fraction, dtype=float), 0.0, 1.0)
        if self.evaluator is not None:
            return self.evaluator(f)
        t0, t1 = self.t[0], self.t[-1]
        s = t0 + f * (t1 - t0)
        cols = [np.interp(s, self.t, self.points[:, d]) for d in range(self.model.dim)]
        return np.stack(cols, axis=-1)

    def __repr__(self):
        return f"Curve({self.model.name}, samples={self.t.size}, length={self.length}, termination={self.termination!r})"

    def reversed(self) -> "Curve":
        ev = None if self.evaluator is None else (lambda f, e=self.evaluator: e(1.0 - np.asarray(f)))
        vel = None if self.velocities is None else -self.velocities[::-1]
        return Curve(self.model, self.t[-1] - self.t[::-1], self.points[::-1], self.arclength, self.length, vel, self.termination, ev)


@dataclass(frozen=True)
class ShootingResult:
    velocity: np.ndarray
    miss: float
    iterations: int
    converged: bool
    curve: Optional[Curve] = None


def _vec(model: MetricModel, p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return model.vector(p)
    q = np.asarray(p, dtype=float)
    if q.shape != (model.dim,):
        raise InputError(f"{model.name} expects coordinate vectors of length {model.dim}")
    if not np.all(np.isfinite(q)):
        raise InputError("coordinates must be finite")
    if np.any(q[model.r_slice] < 0):
        raise InputError("radial coordinates must be nonnegative")
    return q


# ---------------------------------------------------------------------------
# lengths


def segment_lengths(model: MetricModel, P: np.ndarray) -> np.ndarray:
    """Midpoint-rule lengths of the chart segments ``P[i] -> P[i+1]``.

    A segment with an endpoint on a cusp (``r_k = 0``) pays only the radial
    cost in that factor: theta_k is meaningless at the cusp point.
    """
    P = np.asarray(P, dtype=float)
    delta = np.diff(P, axis=0)
    if model.n:
        r = P[:, model.r_slice]
        at_cusp = (r[:-1] == 0.0) | (r[1:] == 0.0)
        dth = delta[:, model.theta_slice]
        delta[:, model.theta_slice] = np.where(at_cusp, 0.0, dth)
    mid = 0.5 * (P[1:] + P[:-1])
    return np.sqrt(np.sum(model.diag(mid) * delta**2, axis=-1))


def _subdivide(P: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return P
    s = np.arange(k) / k
    fine = P[:-1, None, :] + s[None, :, None] * (P[1:, None, :] - P[:-1, None, :])
    return np.concatenate([fine.reshape(-1, P.shape[1]), P[-1:]], axis=0)


def curve_length_estimate(model: MetricModel, curve: Curve, tol: float = 1e-10, max_level: int = 12) -> tuple[float, float]:
    """Length of the chart polyline through the samples and an error estimate.

    Each segment is subdivided ``2^j`` times until two successive
    Richardson-combined midpoint sums differ by less than ``tol`` (relative
    to ``max(1, L)``).
    """
    if not isinstance(curve, Curve):
        raise InputError("curve_length expects a Curve")
    P = curve.points
    prev_raw = float(np.sum(segment_lengths(model, P)))
    prev_rich = None
    err = np.inf
    value = prev_raw
    for level in range(1, max_level + 1):
        raw = float(np.sum(segment_lengths(model, _subdivide(P, 2**level))))
        rich = (4.0 * raw - prev_raw) / 3.0
        if prev_rich is not None:
            err = abs(rich - prev_rich)
            value = rich
            if err < tol * max(1.0, abs(rich)):
                break
        prev_raw, prev_rich, value = raw, rich, rich
    return value, err


def curve_length(model: MetricModel, curve: Curve, tol: float = 1e-10) -> float:
    return curve_length_estimate(model, curve, tol)[0]


def partition_length_check(model: MetricModel, curve: Curve, K: int, strategy: str = "auto") -> float:
    """Sum of model distances over a K-partition of the curve parameter."""
    if K < 1:
        raise InputError("partition count must be positive")
    pts = curve.at(np.linspace(0.0, 1.0, K + 1))
    pts[:, model.r_slice] = np.maximum(pts[:, model.r_slice], 0.0)
    return float(sum(distance(model, pts[i], pts[i + 1], strategy=strategy) for i in range(K)))


def speeds(model: MetricModel, curve: Curve) -> np.ndarray:
    """Metric speed at the samples (needs stored velocities)."""
    if curve.velocities is None:
        raise InputError("curve carries no velocities")
    return model.norm(curve.points, curve.velocities)


# ---------------------------------------------------------------------------
# geodesic ODE


def _acceleration(model: MetricModel, q: np.ndarray, v: np.ndarray) -> np.ndarray:
    g = model.diag(q)
    dg = model.diag_grad(q)  # dg[i, j] = d_j g_i
    first = 2.0 * (dg @ v) * v
    second = dg.T @ (v**2)  # sum_j d_i g_j v_j^2
    return -(first - second) / (2.0 * g)


def connection(model: MetricModel, q: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``Gamma(a, b)`` at sample points, vectorized over the leading axis."""
    g = model.diag(q)
    dg = model.diag_grad(q)
    sym = np.einsum("...ij,...j->...i", dg, a) * b + np.einsum("...ij,...j->...i", dg, b) * a
    cross = np.einsum("...ji,...j->...i", dg, a * b)
    return (sym - cross) / (2.0 * g)


def integrate_geodesic(
    model: MetricModel,
    p,
    v,
    T: float,
    samples: int = 257,
    r_floor: float = R_FLOOR,
    rtol: float = 1e-12,
    atol: float = 1e-16,
) -> Curve:
    """Solve ``x'' + Gamma(x', x') = 0`` from ``(p, v)`` up to time ``T``.

    Integration stops early when some ``r_k`` drops to ``r_floor`` (the
    curve reaches a stratum) or the sphere chart hits a pole.  The result
    records ``termination`` as ``"time"``, ``"stratum"`` or ``"chart"``.
    """
    q0 = _vec(model, p)
    v0 = np.asarray(v.vector if isinstance(v, TangentVector) else v, dtype=float)
    if v0.shape != q0.shape:
        raise InputError("velocity dimension does not match the point")
    if model.singular(q0):
        raise InputError("integrate_geodesic needs a start point in the smooth locus")
    if not model.norm(q0, v0) > 0:
        raise InputError("initial velocity must be nonzero")
    D = q0.size

    def rhs(t, y):
        return np.concatenate([y[D:], _acceleration(model, y[:D], y[D:])])

    events = []
    if isinstance(model, SpherePatch):
        pole = lambda t, y: min(y[0], np.pi - y[0]) - 1e-9  # noqa: E731
        pole.terminal = True
        events.append(pole)
    elif model.n:
        floor = lambda t, y: np.min(y[model.r_slice]) - r_floor  # noqa: E731
        floor.terminal = True
        floor.direction = -1
        events.append(floor)

    res = solve_ivp(rhs, (0.0, T), np.concatenate([q0, v0]), method="DOP853", rtol=rtol, atol=atol,
                    dense_output=True, events=events or None)
    if res.status == -1:
        ts = res.t
        partial = Curve(model, ts, res.y[:D].T, False, None, res.y[D:].T, "failed")
        raise SingularApproachError(f"geodesic integration failed: {res.message}", partial=partial)
    t_end = res.t[-1]
    cause = "time"
    if res.status == 1:
        cause = "chart" if isinstance(model, SpherePatch) else "stratum"
    ts = np.linspace(0.0, t_end, samples)
    Y = res.sol(ts)
    sol = res.sol
    ev = lambda f: sol(np.asarray(f) * t_end)[:D].T  # noqa: E731
    return Curve(model, ts, Y[:D].T, True, None, Y[D:].T, cause, ev)


def clairaut_constants(model: MetricModel, curve: Curve) -> np.ndarray:
    """Angular momenta ``g_{theta_k theta_k} theta_k'`` at every sample.

    For a cuspidal factor of scale s this is ``s r_k^6 theta_k'``.
    """
    if curve.velocities is None:
        raise InputError("curve carries no velocities")
    g = model.diag(curve.points)
    return g[:, model.theta_slice] * curve.velocities[:, model.theta_slice]


# ---------------------------------------------------------------------------
# exact product reduction


def exact_available(model: MetricModel) -> bool:
    return isinstance(model, (EuclideanBlock, ProductCuspidal, SpherePatch))


def _cusp_factor(scale: float, r0: float, th0: float, r1: float, th1: float):
    """Distance and fraction evaluator for one factor ``s (4dr^2 + r^6 dtheta^2)``."""
    root_s = np.sqrt(scale)
    if r0 == 0.0 or r1 == 0.0 or th0 == th1:
        d = 2.0 * root_s * abs(r1 - r0)
        theta = th1 if r0 == 0.0 else th0

        def radial(f):
            f = np.asarray(f)
            return r0 + f * (r1 - r0), np.full(f.shape, theta)

        return d, radial, None
    sol = clairaut.solve(2.0 * r0, 2.0 * r1, (th1 - th0) / 8.0)
    return root_s * sol.length, None, sol


def _cusp_evaluator(sol, th0):
    _, _, dense = clairaut.trajectory(sol, 0.0, samples=2, dense=True)
    L = sol.length

    def ev(f):
        f = np.asarray(f, dtype=float)
        y = dense(f.reshape(-1) * L)
        return (0.5 * y[0]).reshape(f.shape), (th0 + 8.0 * y[1]).reshape(f.shape)

    return ev


def _sphere_xyz(phi, th):
    return np.stack([np.sin(phi) * np.cos(th), np.sin(phi) * np.sin(th), np.cos(phi)], axis=-1)


def _sphere_factor(radius, a, b):
    u, w = _sphere_xyz(a[0], a[1]), _sphere_xyz(b[0], b[1])
    omega = float(np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w)))

    def ev(f):
        f = np.atleast_1d(np.asarray(f, dtype=float))
        grid = np.union1d(np.linspace(0.0, 1.0, 257), f)
        if omega == 0.0:
            xyz = np.tile(u, (grid.size, 1))
        else:
            xyz = (np.sin((1 - grid) * omega)[:, None] * u + np.sin(grid * omega)[:, None] * w) / np.sin(omega)
        phi = np.arctan2(np.hypot(xyz[:, 0], xyz[:, 1]), xyz[:, 2])
        th = np.unwrap(np.arctan2(xyz[:, 1], xyz[:, 0]))
        th += a[1] - th[0]
        idx = np.searchsorted(grid, f)
        return np.stack([phi[idx], th[idx]], axis=-1)

    return radius * omega, ev


def exact_distance(model: MetricModel, qa: np.ndarray, qb: np.ndarray) -> float:
    if isinstance(model, EuclideanBlock):
        return float(np.linalg.norm(qb - qa))
    if isinstance(model, SpherePatch):
        return _sphere_factor(model.radius, qa, qb)[0]
    if isinstance(model, ProductCuspidal):
        sq = float(np.sum((qb[: model.m2] - qa[: model.m2]) ** 2))
        ra, rb = qa[model.r_slice], qb[model.r_slice]
        ta, tb = qa[model.theta_slice], qb[model.theta_slice]
        for k in range(model.n):
            sq += _cusp_factor(model.scale, ra[k], ta[k], rb[k], tb[k])[0] ** 2
        return float(np.sqrt(sq))
    raise InputError(f"no exact reduction for {model.name}")


def exact_connect(model: MetricModel, qa: np.ndarray, qb: np.ndarray, samples: int = 257) -> Curve:
    if isinstance(model, SpherePatch):
        length, ev = _sphere_factor(model.radius, qa, qb)

        def evaluator(f):
            f = np.asarray(f, dtype=float)
            return ev(f.reshape(-1)).reshape(f.shape + (2,))

    elif isinstance(model, (EuclideanBlock, ProductCuspidal)):
        m2, n = model.m2, model.n
        sq = float(np.sum((qb[:m2] - qa[:m2]) ** 2))
        parts = []
        for k in range(n):
            ra, rb = qa[m2 + k], qb[m2 + k]
            ta, tb = qa[m2 + n + k], qb[m2 + n + k]
            d, radial, sol = _cusp_factor(model.scale, ra, ta, rb, tb)
            sq += d**2
            parts.append(radial if sol is None else _cusp_evaluator(sol, ta))
        length = float(np.sqrt(sq))

        def evaluator(f):
            f = np.asarray(f, dtype=float)
            out = np.empty(f.shape + (model.dim,))
            out[..., :m2] = qa[:m2] + f[..., None] * (qb[:m2] - qa[:m2])
            for k, part in enumerate(parts):
                out[..., m2 + k], out[..., m2 + n + k] = part(f)
            return out

    else:
        raise InputError(f"no exact reduction for {model.name}")
    t = np.linspace(0.0, 1.0, samples)
    pts = evaluator(t)
    pts[0], pts[-1] = qa, qb
    return Curve(model, t, pts, True, length, None, "exact", evaluator)


# ---------------------------------------------------------------------------
# strategy A: discrete energy


def _hessian_of_metric(model: MetricModel, M: np.ndarray) -> np.ndarray:
    # hg[..., d, e, f] = d_f d_e g_d by central differences of the analytic gradient
    D = M.shape[-1]
    h = 1e-6 * np.maximum(1.0, np.abs(M))
    out = np.empty(M.shape + (D, D))
    for f in range(D):
        step = np.zeros_like(M)
        step[..., f] = h[..., f]
        out[..., f] = (model.diag_grad(M + step) - model.diag_grad(M - step)) / (2.0 * h[..., f, None, None])
    return out


def _energy(model, P):
    N = P.shape[0] - 1
    delta = np.diff(P, axis=0)
    mid = 0.5 * (P[1:] + P[:-1])
    return N * float(np.sum(model.diag(mid) * delta**2))


def _energy_system(model, P):
    """Energy, gradient and block tridiagonal Hessian of the discrete energy."""
    N = P.shape[0] - 1
    delta = np.diff(P, axis=0)
    mid = 0.5 * (P[1:] + P[:-1])
    g = model.diag(mid)
    dg = model.diag_grad(mid)
    hg = _hessian_of_metric(model, mid)
    E = N * float(np.sum(g * delta**2))
    FM = np.einsum("nde,nd->ne", dg, delta**2)
    FD = 2.0 * g * delta
    grad = np.zeros_like(P)
    grad[:-1] += 0.5 * FM - FD
    grad[1:] += 0.5 * FM + FD
    grad *= N
    FMM = np.einsum("ndef,nd->nef", hg, delta**2)
    FMD = 2.0 * dg.transpose(0, 2, 1) * delta[:, None, :]  # FMD[e, d] = 2 d_e g_d Delta_d
    FDD = 2.0 * np.einsum("nd,de->nde", g, np.eye(P.shape[1]))
    FDM = FMD.transpose(0, 2, 1)
    Haa = 0.25 * FMM - 0.5 * FMD - 0.5 * FDM + FDD
    Hbb = 0.25 * FMM + 0.5 * FMD + 0.5 * FDM + FDD
    Hab = 0.25 * FMM + 0.5 * FMD - 0.5 * FDM - FDD  # rows: P_i, cols: P_{i+1}
    D = P.shape[1]
    diag = np.zeros((N + 1, D, D))
    diag[:-1] += Haa
    diag[1:] += Hbb
    return E, grad, N * diag, N * Hab


def _banded(diag, off, free, mu):
    # lower banded storage of the block tridiagonal matrix restricted to free coordinates
    nb, D, _ = diag.shape
    F = free.astype(float)
    diag = diag * F[:, :, None] * F[:, None, :]
    off = off * F[:-1, :, None] * F[:, None, :][1:]
    scale = np.einsum("nii->ni", diag).copy()
    floor = 1e-14 * max(float(scale.max()), 1e-300)
    scale = np.maximum(scale, floor)
    idx = np.arange(D)
    diag[:, idx, idx] += mu * scale
    diag[:, idx, idx] = np.where(free, diag[:, idx, idx], 1.0)
    size = nb * D
    u = 2 * D - 1
    ab = np.zeros((u + 1, size))
    for a in range(D):
        for b in range(a + 1):
            # H[i*D + a, i*D + b] for a >= b
            ab[a - b, np.arange(nb) * D + b] = diag[:, a, b]
    for a in range(D):
        for b in range(D):
            # H[(i+1)*D + a, i*D + b] = Hab[i][b, a]
            k = D + a - b
            ab[k, np.arange(nb - 1) * D + b] = off[:, b, a]
    return ab


def _project(model, P, tie):
    lo, hi = model.lower_bounds(), model.upper_bounds()
    P = np.clip(P, lo, hi)
    for row, nbr, cols in tie:
        P[row, cols] = P[nbr, cols]
    return P


def _minimize_energy(model, P, free, tie, max_iter=200):
    mu = 1e-8
    E, G, Hd, Ho = _energy_system(model, P)
    for it in range(max_iter):
        Gf = np.where(free, G, 0.0)
        accepted = False
        while mu < 1e12:
            try:
                step = solveh_banded(_banded(Hd, Ho, free, mu), -Gf.reshape(-1), lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            step = np.where(free, step.reshape(P.shape), 0.0)
            trial = _project(model, P + step, tie)
            E_new = _energy(model, trial)
            if E_new <= E * (1.0 + 1e-15):
                accepted = True
                break
            mu *= 10.0
        if not accepted:
            return P, it
        decrease = -float(np.sum(Gf * step))
        P = trial
        mu = max(mu * 0.1, 1e-12)
        if decrease <= 1e-15 * E or np.max(np.abs(step)) <= 1e-15 * max(1.0, np.max(np.abs(P))):
            return P, it
        E, G, Hd, Ho = _energy_system(model, P)
    raise SolverError("energy minimization did not converge", best=P, residual=float(np.linalg.norm(np.where(free, G, 0.0))))


def _setup_ends(model, qa, qb, free_a, free_b):
    D = model.dim
    fa = np.zeros(D, bool) if free_a is None else np.asarray(free_a, bool)
    fb = np.zeros(D, bool) if free_b is None else np.asarray(free_b, bool)
    tie = []
    for k in range(model.n):
        rk, tk = model.m2 + k, model.m2 + model.n + k
        if qa[rk] == 0.0 and not fa[rk]:
            tie.append((0, 1, [tk]))
            fa[tk] = False
        if qb[rk] == 0.0 and not fb[rk]:
            tie.append((-1, -2, [tk]))
            fb[tk] = False
    return fa, fb, tie


def energy_connect(
    model: MetricModel,
    p,
    q,
    n0: int = 32,
    tol: float = 1e-8,
    n_max: int = 2**14,
    free_a=None,
    free_b=None,
    perturbation: float = 0.0,
    seed: Optional[int] = None,
    initial: Optional[np.ndarray] = None,
) -> Curve:
    """Strategy A: minimize ``N * sum_i g(M_i)(Delta_i, Delta_i)`` over polylines.

    Endpoint coordinates flagged in ``free_a`` / ``free_b`` are optimized
    too (used for distances to strata).  Cusp endpoints tie their angle to
    the neighbouring vertex.  The vertex count doubles until the Richardson
    length estimate changes by less than ``tol * max(1, L)``.
    """
    qa, qb = _vec(model, p), _vec(model, q)
    fa, fb, tie = _setup_ends(model, qa, qb, free_a, free_b)
    N = n0
    s = np.linspace(0.0, 1.0, N + 1)[:, None]
    if initial is not None:
        src = np.asarray(initial, dtype=float)
        u = np.linspace(0.0, 1.0, src.shape[0])
        P = np.stack([np.interp(s[:, 0], u, src[:, d]) for d in range(model.dim)], axis=-1)
    else:
        a, b = qa.copy(), qb.copy()
        for k in range(model.n):
            rk, tk = model.m2 + k, model.m2 + model.n + k
            if a[rk] == 0.0:
                a[tk] = b[tk]
            if b[rk] == 0.0:
                b[tk] = a[tk]
        P = a + s * (b - a)
    if perturbation:
        rng = np.random.default_rng(seed)
        bumps = sum(np.sin((j + 1) * np.pi * s) * rng.normal(size=model.dim) / (j + 1) for j in range(3))
        P = P + perturbation * bumps
    P[0], P[-1] = qa, qb
    free = np.ones_like(P, dtype=bool)
    free[0], free[-1] = fa, fb
    P = _project(model, P, tie)

    history = []
    rich_prev = None
    while True:
        P, _ = _minimize_energy(model, P, free, tie)
        L = float(np.sum(segment_lengths(model, P)))
        history.append(L)
        if len(history) >= 2:
            rich = (4.0 * history[-1] - history[-2]) / 3.0
            if rich_prev is not None and abs(rich - rich_prev) < tol * max(1.0, abs(rich)):
                break
            rich_prev = rich
        if N >= n_max:
            if rich_prev is None:
                raise SolverError("energy refinement exhausted before a length estimate", best=P)
            break
        mid = 0.5 * (P[1:] + P[:-1])
        fine = np.empty((2 * N + 1, model.dim))
        fine[0::2], fine[1::2] = P, mid
        P = fine
        N *= 2
        free = np.ones_like(P, dtype=bool)
        free[0], free[-1] = fa, fb
    length = rich if len(history) >= 2 else history[-1]
    seg = segment_lengths(model, P)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    t = cum / cum[-1] if cum[-1] > 0 else np.linspace(0.0, 1.0, P.shape[0])
    return Curve(model, t, P, True, float(length), None, "energy")


# ---------------------------------------------------------------------------
# strategy B: shooting


def shoot(model: MetricModel, p, q, v0=None, tol: float = 1e-10, max_iter: int = 50) -> ShootingResult:
    """Strategy B: solve ``exp_p(v) = q`` for ``v`` with time-one geodesics."""
    qa, qb = _vec(model, p), _vec(model, q)
    if model.singular(qa) or model.singular(qb):
        raise InputError("shooting needs both endpoints in the smooth locus")
    if v0 is None:
        seed_curve = energy_connect(model, qa, qb, tol=1e-6)
        P = seed_curve.points
        N = P.shape[0] - 1
        v0 = (-3.0 * P[0] + 4.0 * P[1] - P[2]) * N / 2.0
    count = [0]

    def miss(v):
        count[0] += 1
        try:
            c = integrate_geodesic(model, qa, v, 1.0, samples=2)
        except (InputError, SingularApproachError):
            return np.full(qa.size, 1e3)
        if c.termination != "time":
            return np.full(qa.size, 1e3)
        return c.end - qb

    sol = root(miss, np.asarray(v0, float), method="hybr", options={"xtol": 1e-14, "maxfev": max_iter * (qa.size + 1)})
    v = sol.x
    residual = float(np.linalg.norm(miss(v)))
    converged = residual <= tol * max(1.0, float(np.linalg.norm(qb - qa)))
    curve = None
    if converged:
        c = integrate_geodesic(model, qa, v, 1.0)
        speed = float(model.norm(qa, v))
        curve = Curve(model, c.t, c.points, True, speed, c.velocities, "shooting", c.evaluator)
    return ShootingResult(v, residual, count[0], converged, curve)


# ---------------------------------------------------------------------------
# public entry points


def connect(model: MetricModel, p, q, strategy: str = "auto", **options) -> Curve:
    """Geodesic from ``p`` to ``q`` parameterized proportionally to arclength."""
    qa, qb = _vec(model, p), _vec(model, q)
    if strategy == "auto":
        strategy = "exact" if exact_available(model) else "energy"
    if strategy == "exact":
        return exact_connect(model, qa, qb, **options)
    if strategy == "energy":
        return energy_connect(model, qa, qb, **options)
    if strategy == "shooting":
        res = shoot(model, qa, qb, **options)
        if not res.converged:
            raise SolverError("shooting did not converge", best=res.velocity, residual=res.miss)
        return res.curve
    raise InputError(f"unknown strategy {strategy!r}")


def distance(model: MetricModel, p, q, strategy: str = "auto", **options) -> float:
    qa, qb = _vec(model, p), _vec(model, q)
    if np.array_equal(qa, qb):
        return 0.0
    if strategy == "auto":
        strategy = "exact" if exact_available(model) else "energy"
    if strategy == "exact":
        return exact_distance(model, qa, qb)
    return float(connect(model, qa, qb, strategy=strategy, **options).length)


def sup_distance(a: Curve, b: Curve, samples: int = 257) -> float:
    """Max chart-coordinate distance between two curves at equal parameter fractions."""
    f = np.linspace(0.0, 1.0, samples)
    return float(np.max(np.linalg.norm(a.at(f) - b.at(f), axis=-1)))


# ---------------------------------------------------------------------------
# second variation


def factor_curvature(model: MetricModel, q: np.ndarray, factor) -> np.ndarray:
    """Gaussian curvature of one product factor at sample points ``q``."""
    if factor.kind == "plane":
        return np.zeros(q.shape[:-1])
    if factor.kind == "sphere":
        return np.full(q.shape[:-1], 1.0 / model.radius**2)
    r = q[..., factor.index[0]]
    return -1.5 / (model.scale * r**2)


def second_variation_check(
    model: MetricModel,
    p0,
    p1,
    w0,
    w1,
    h: float = 1e-2,
    samples: int = 2049,
) -> tuple[float, float]:
    """Second variation of length for a family of connecting geodesics.

    The end curves are the geodesics ``sigma -> exp_{p_j}(sigma w_j)`` (a zero
    ``w_j`` keeps that end fixed), so the boundary terms vanish.  Returns the
    centred second difference of ``L(sigma)`` at step ``h`` and the integral

        (1/L) int_0^1 |(nabla_T V)^perp|^2 - sum_f K_f (|V_f|^2 |T_f|^2 - <V_f, T_f>^2) dt

    evaluated along the middle geodesic with the product curvature tensor.
    """
    if isinstance(model, PerturbedProduct) or not exact_available(model):
        raise InputError("second_variation_check needs a product model with exact geodesics")
    a0, a1 = _vec(model, p0), _vec(model, p1)
    w0 = np.asarray(w0, float)
    w1 = np.asarray(w1, float)
    if not (np.any(w0) or np.any(w1)):
        raise InputError("degenerate family: both end variations vanish")

    def end(a, w, sigma):
        if sigma == 0.0 or not np.any(w):
            return a
        c = integrate_geodesic(model, a, np.sign(sigma) * w, abs(sigma), samples=2)
        return c.end

    sigmas = [-2 * h, -h, 0.0, h, 2 * h]
    curves = {s: exact_connect(model, end(a0, w0, s), end(a1, w1, s)) for s in sigmas}
    lengths = {s: curves[s].length for s in sigmas}
    second_difference = (lengths[h] - 2.0 * lengths[0.0] + lengths[-h]) / h**2

    t = np.linspace(0.0, 1.0, samples)
    X = {s: curves[s].at(t) for s in sigmas}
    V = (-X[2 * h] + 8.0 * X[h] - 8.0 * X[-h] + X[-2 * h]) / (12.0 * h)
    if not np.any(np.abs(V) > 0):
        raise InputError("degenerate family: zero variation field")
    base = X[0.0]
    dt = t[1] - t[0]

    def ddt(F):
        out = np.empty_like(F)
        out[2:-2] = (-F[4:] + 8.0 * F[3:-1] - 8.0 * F[1:-3] + F[:-4]) / (12.0 * dt)
        out[:2] = (-25 * F[:2] + 48 * F[1:3] - 36 * F[2:4] + 16 * F[3:5] - 3 * F[4:6]) / (12.0 * dt)
        out[-2:] = (25 * F[-2:] - 48 * F[-3:-1] + 36 * F[-4:-2] - 16 * F[-5:-3] + 3 * F[-6:-4]) / (12.0 * dt)
        return out

    T = ddt(base)
    cov = ddt(V) + connection(model, base, T, V)
    g = model.diag(base)
    TT = np.sum(g * T * T, axis=-1)
    perp = cov - (np.sum(g * cov * T, axis=-1) / TT)[:, None] * T
    term = np.sum(g * perp * perp, axis=-1)
    for factor in model.factors():
        idx = list(factor.index)
        gf, Vf, Tf = g[:, idx], V[:, idx], T[:, idx]
        wedge = np.sum(gf * Vf * Vf, -1) * np.sum(gf * Tf * Tf, -1) - np.sum(gf * Vf * Tf, -1) ** 2
        term -= factor_curvature(model, base, factor) * wedge
    formula = float(simpson(term, x=t)) / lengths[0.0]
    return float(second_difference), formula
