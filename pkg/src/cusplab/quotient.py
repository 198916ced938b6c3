"""The cyclic quotient of the cusp ``dr^2 + r^6 dtheta^2`` by ``T: theta -> theta + 1``.

Points of the universal cover are ``(r, theta)`` with ``theta`` real; the
quotient reduces ``theta`` mod 1 and collapses ``r = 0`` to the single point
``O``.  ``T`` plays the role of a Dehn twist.  The boundary value problems
are solved with the Clairaut reduction; the generic polyline solver on
:class:`ClairautPlane` serves as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import clairaut
from .errors import CuspLabError, InputError, SolverError
from .geodesics import Curve, energy_connect, segment_lengths
from .metrics import Factor, MetricModel
from .strata import StratumLabel, loglog_slope

__all__ = [
    "ClairautPlane",
    "QuotientPoint",
    "ORIGIN",
    "deck",
    "ClairautGeodesic",
    "clairaut_connect",
    "quotient_distance",
    "deviation_bound",
    "PolygonalPath",
    "TwistSequence",
    "LimitTable",
    "geodesic_limit_experiment",
    "approximating_concatenation",
    "LinkingLoop",
    "minimal_linking_loop",
    "NonUniqueness",
    "nonunique_geodesics",
]


@dataclass(frozen=True)
class ClairautPlane(MetricModel):
    """``dr^2 + r^6 dtheta^2`` on the cover, coordinates ``(r, theta)``."""

    def __post_init__(self):
        object.__setattr__(self, "m2", 0)
        object.__setattr__(self, "n", 1)
        object.__setattr__(self, "name", "ClairautPlane")

    def diag(self, q):
        q = np.asarray(q, dtype=float)
        g = np.ones(q.shape)
        g[..., 1] = q[..., 0] ** 6
        return g

    def diag_grad(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 1, 0] = 6.0 * q[..., 0] ** 5
        return out

    def factors(self):
        return [Factor("clairaut", (0, 1))]


PLANE = ClairautPlane()


class QuotientPoint:
    """A point of the quotient; ``theta`` is stored mod 1, ignored at ``r = 0``."""

    __slots__ = ("r", "theta")

    def __init__(self, r: float, theta: float = 0.0):
        r, theta = float(r), float(theta)
        if not (np.isfinite(r) and np.isfinite(theta)) or r < 0:
            raise InputError("quotient points need finite r >= 0 and finite theta")
        self.r = r
        self.theta = 0.0 if r == 0.0 else theta % 1.0

    @property
    def is_origin(self) -> bool:
        return self.r == 0.0

    def lift(self, k: int = 0) -> np.ndarray:
        return np.array([self.r, self.theta + k])

    def __eq__(self, other):
        if not isinstance(other, QuotientPoint):
            return NotImplemented
        return self.r == other.r and (self.r == 0.0 or self.theta == other.theta)

    def __hash__(self):
        return hash((self.r, 0.0 if self.r == 0.0 else self.theta))

    def __repr__(self):
        return "O" if self.is_origin else f"QuotientPoint(r={self.r:.6g}, theta={self.theta:.6g})"


ORIGIN = QuotientPoint(0.0)


def deck(q, k: int = 1) -> np.ndarray:
    """``T^k`` on cover coordinates ``(..., 2)``."""
    q = np.array(q, dtype=float)
    q[..., 1] += k
    return q


def _cover(p) -> np.ndarray:
    if isinstance(p, QuotientPoint):
        return p.lift()
    q = np.asarray(p, dtype=float)
    if q.shape != (2,) or not np.all(np.isfinite(q)) or q[0] < 0:
        raise InputError("expected a cover point (r >= 0, theta)")
    return q


class ClairautGeodesic(NamedTuple):
    c: float
    length: float
    curve: Curve
    solution: clairaut.ClairautSolution
    residual: float  # max |r^6 theta' - c| relative to max(|c|, 1e-300)


def clairaut_connect(p0, p1, dtheta: float | None = None, samples: int = 257) -> ClairautGeodesic:
    """Geodesic from ``p0`` to ``p1`` in the cover with total winding ``dtheta``.

    ``dtheta`` defaults to ``theta1 - theta0``.  The curve is parameterized
    proportionally to arclength and evaluates exactly through the ODE dense
    output.
    """
    a, b = _cover(p0), _cover(p1)
    r0, r1 = float(a[0]), float(b[0])
    if not (r0 > 0 and r1 > 0):
        raise InputError("clairaut_connect needs r0, r1 > 0")
    W = float(b[1] - a[1]) if dtheta is None else float(dtheta)
    sol = clairaut.solve(r0, r1, W)
    th0, L = float(a[1]), sol.length
    if W == 0.0:
        def ev(f):
            f = np.asarray(f, dtype=float)
            return np.stack([r0 + f * (r1 - r0), np.full(f.shape, th0)], axis=-1)

        f = np.linspace(0.0, 1.0, samples)
        curve = Curve(PLANE, f, ev(f), True, L, None, "radial", ev)
        return ClairautGeodesic(0.0, L, curve, sol, 0.0)
    s, states, dense = clairaut.trajectory(sol, th0, samples=samples, dense=True)
    residual = float(np.max(np.abs(states[0] ** 6 * states[3] - sol.c)) / max(abs(sol.c), 1e-300))

    def ev(f):
        f = np.asarray(f, dtype=float)
        y = dense(f.reshape(-1) * L)
        return np.stack([y[0], y[1]], axis=-1).reshape(f.shape + (2,))

    curve = Curve(PLANE, s / L, states[:2].T, True, L, states[2:].T * L, "clairaut", ev)
    return ClairautGeodesic(sol.c, L, curve, sol, residual)


def quotient_distance(p, q) -> float:
    """Distance in the quotient: the shortest lift or the path through ``O``."""
    a, b = _cover(p), _cover(q)
    if a[0] == 0.0 or b[0] == 0.0:
        return float(a[0] + b[0])
    w = (b[1] - a[1]) % 1.0
    best = a[0] + b[0]
    for W in (w, w - 1.0):
        best = min(best, clairaut.solve(a[0], b[0], W).length)
    return float(best)


def deviation_bound(P, Q) -> np.ndarray:
    """Upper bound for the cover distance between sample arrays ``P``, ``Q``.

    Either go through ``O``, or move radially to the smaller radius and
    along the circle there.
    """
    P, Q = np.asarray(P, dtype=float), np.asarray(Q, dtype=float)
    rp, rq = P[..., 0], Q[..., 0]
    lo = np.minimum(rp, rq)
    circle = np.abs(rp - rq) + lo**3 * np.abs(P[..., 1] - Q[..., 1])
    return np.minimum(rp + rq, circle)


# ---------------------------------------------------------------------------
# polygonal data


def _label(q) -> StratumLabel:
    return StratumLabel({1}) if q[0] == 0.0 else StratumLabel()


@dataclass(frozen=True, eq=False)
class PolygonalPath:
    """Vertices on strata, partition times and the labels at each joint.

    ``tau[j]`` is the common label of ``p_j`` and ``p_{j+1}``; ``interior[j]``
    the label along the open segment.
    """

    vertices: np.ndarray  # (k+1, 2) cover coordinates
    times: np.ndarray  # (k+1,)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.times, dtype=float)
        if V.ndim != 2 or V.shape[1] != 2 or t.shape != (V.shape[0],) or V.shape[0] < 2:
            raise InputError("a polygonal path needs k+1 >= 2 vertices and matching times")
        if np.any(np.diff(t) <= 0):
            raise InputError("partition times must increase")
        object.__setattr__(self, "vertices", V)
        object.__setattr__(self, "times", t)

    @property
    def k(self) -> int:
        return self.vertices.shape[0] - 1

    def segment(self, j: int) -> Curve:
        return _segment(self.vertices[j], self.vertices[j + 1])

    @property
    def tau(self) -> list[StratumLabel]:
        return [StratumLabel(_label(a) & _label(b)) for a, b in zip(self.vertices[:-1], self.vertices[1:])]

    @property
    def interior(self) -> list[StratumLabel]:
        out = []
        for j in range(self.k):
            mid = self.segment(j).at(0.5)
            out.append(_label(mid))
        return out

    def length_defects(self) -> np.ndarray:
        """``L(p_j p_{j+1}) - (t_{j+1} - t_j)`` per segment."""
        return np.array([self.segment(j).length for j in range(self.k)]) - np.diff(self.times)

    def label_conditions(self) -> list[bool]:
        """For each joint ``p_j`` (0 < j < k): ``tau`` on both sides strictly precedes ``Lambda(p_j)``."""
        tau = self.tau
        return [tau[j - 1].precedes(_label(self.vertices[j])) and tau[j].precedes(_label(self.vertices[j]))
                for j in range(1, self.k)]


def _segment(a, b) -> Curve:
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a[0] == 0.0 or b[0] == 0.0:
        theta = b[1] if a[0] == 0.0 else a[1]
        L = abs(b[0] - a[0])

        def ev(f):
            f = np.asarray(f, dtype=float)
            return np.stack([a[0] + f * (b[0] - a[0]), np.full(f.shape, theta)], axis=-1)

        f = np.linspace(0.0, 1.0, 65)
        return Curve(PLANE, f, ev(f), True, L, None, "radial", ev)
    return clairaut_connect(a, b).curve


@dataclass(frozen=True, eq=False)
class TwistSequence:
    """Twist exponents ``counts[i, j]``: ``T_(j, n_i) = T^counts[i, j]``."""

    family: np.ndarray  # (F,) family indices n
    counts: np.ndarray  # (F, k) integers

    def __post_init__(self):
        n = np.asarray(self.family)
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != n.size:
            raise InputError("twist counts must have one row per family member")
        if not np.issubdtype(c.dtype, np.integer):
            if not np.all(c == np.round(c)):
                raise InputError("twist counts must be integers")
            c = c.astype(np.int64)
        object.__setattr__(self, "family", n)
        object.__setattr__(self, "counts", c)

    def classify(self) -> list[str]:
        """Per joint: 'trivial', 'unbounded' (|count| nondecreasing and growing) or 'bounded'."""
        out = []
        for col in np.abs(self.counts.T):
            if not np.any(col):
                out.append("trivial")
            elif np.all(np.diff(col) >= 0) and col[-1] > col[0]:
                out.append("unbounded")
            else:
                out.append("bounded")
        return out


def approximating_concatenation(path: PolygonalPath, twists: TwistSequence) -> list[Curve]:
    """Approximating concatenations, one per family member.

    Segment ``j`` is moved by ``T_(0,n)^-1 ... T_(j,n)^-1``; a nonzero twist
    at joint ``j > 0`` is only compatible with a vertex at ``O``.  Curves are
    parameterized proportionally to arclength over the whole path.
    """
    k = path.k
    if twists.counts.shape[1] != k:
        raise InputError(f"path has {k} segments but twist data has {twists.counts.shape[1]} joints")
    for j in range(1, k):
        if np.any(twists.counts[:, j]) and path.vertices[j, 0] != 0.0:
            raise InputError(f"joint {j} is not at O, so its twist would break continuity")
    segs = [path.segment(j) for j in range(k)]
    lengths = np.array([s.length for s in segs])
    total = float(lengths.sum())
    edges = np.concatenate([[0.0], np.cumsum(lengths)]) / total
    curves = []
    for row in twists.counts:
        shifts = -np.cumsum(row)

        def ev(f, shifts=shifts):
            f = np.asarray(f, dtype=float)
            flat = f.reshape(-1)
            out = np.empty((flat.size, 2))
            idx = np.clip(np.searchsorted(edges, flat, side="right") - 1, 0, k - 1)
            for j in range(k):
                sel = idx == j
                if np.any(sel):
                    span = edges[j + 1] - edges[j]
                    local = (flat[sel] - edges[j]) / span if span > 0 else np.zeros(sel.sum())
                    out[sel] = deck(segs[j].at(local), int(shifts[j]))
            return out.reshape(f.shape + (2,))

        f = np.linspace(0.0, 1.0, 257)
        curves.append(Curve(PLANE, f, ev(f), True, total, None, "concatenation", ev))
    return curves


# ---------------------------------------------------------------------------
# the family gamma_n


@dataclass(frozen=True, eq=False)
class LimitTable:
    n: np.ndarray
    length: np.ndarray
    c: np.ndarray
    first_deviation: np.ndarray
    second_deviation: np.ndarray
    residual: np.ndarray
    failures: dict
    path: PolygonalPath
    twists: TwistSequence
    limit_length: float
    curves: list = field(repr=False, default_factory=list)

    @property
    def increasing(self) -> bool:
        return bool(np.all(np.diff(self.length) > 0))

    @property
    def bounded(self) -> bool:
        return bool(np.all(self.length < self.limit_length))

    @property
    def deficit_slope(self) -> float:
        return loglog_slope(self.n, self.limit_length - self.length)

    @property
    def first_monotone(self) -> bool:
        return bool(np.all(np.diff(self.first_deviation) < 0))

    def rows(self) -> list[dict]:
        return [
            {"n": int(n), "L": float(L), "c": float(c), "first_deviation": float(a), "second_deviation": float(b)}
            for n, L, c, a, b in zip(self.n, self.length, self.c, self.first_deviation, self.second_deviation)
        ]


def _limit_path(a, b) -> PolygonalPath:
    r0, r1 = a[0], b[0]
    return PolygonalPath(np.array([a, [0.0, b[1]], b]), np.array([0.0, r0, r0 + r1]))


def geodesic_limit_experiment(p0, p1, n_max: int = 64, samples: int = 513, keep_curves: bool = False) -> LimitTable:
    """Geodesics ``gamma_n`` from ``p0`` to ``T^n p1`` and their polygonal limit.

    Deviations are upper bounds for the cover distance between ``gamma_n``
    and the limit path ``p0 -> O -> T^n p1`` at equal parameter fractions,
    split at the fraction where the limit path reaches ``O``.
    """
    a, b = _cover(p0), _cover(p1)
    r0, r1 = float(a[0]), float(b[0])
    if not (r0 > 0 and r1 > 0):
        raise InputError("the limit experiment needs r0, r1 > 0")
    if n_max < 1:
        raise InputError("n_max must be at least 1")
    total = r0 + r1
    f = np.linspace(0.0, 1.0, samples)
    split = r0 / total
    first = f <= split
    s = f * total
    ns, Ls, cs, d1, d2, res, curves = [], [], [], [], [], [], []
    failures = {}
    for n in range(1, n_max + 1):
        try:
            g = clairaut_connect(a, b, dtheta=n + b[1] - a[1])
        except CuspLabError as exc:
            failures[n] = repr(exc)
            continue
        P = g.curve.at(f)
        sigma = np.where(first[:, None], np.stack([r0 - s, np.full_like(s, a[1])], -1),
                         np.stack([s - r0, np.full_like(s, b[1] + n)], -1))
        dev = deviation_bound(P, sigma)
        ns.append(n)
        Ls.append(g.length)
        cs.append(g.c)
        d1.append(float(dev[first].max()))
        d2.append(float(dev[~first].max()))
        res.append(g.residual)
        if keep_curves:
            curves.append(g.curve)
    ns = np.array(ns)
    twists = TwistSequence(ns, np.stack([np.zeros_like(ns), ns], axis=1))
    return LimitTable(ns, np.array(Ls), np.array(cs), np.array(d1), np.array(d2), np.array(res),
                      failures, _limit_path(a, b), twists, total, curves)


# ---------------------------------------------------------------------------
# linking loops and non-uniqueness


class LinkingLoop(NamedTuple):
    curve: Curve
    linking: int
    length: float
    lengths: dict  # linking number -> length
    turning_radius: float
    upper_bound: float  # the theta-circle through p
    lower_bound: float


def minimal_linking_loop(p, classes: Sequence[int] = (1, 2, 3)) -> LinkingLoop:
    """Shortest loop at ``p`` winding ``+-n`` times for ``n`` in ``classes``.

    The lower bound uses that a loop dipping to radius ``r_m`` has length at
    least ``2 (r - r_m)`` and, winding ``n`` times outside ``r_m``, at least
    ``n r_m^3``.
    """
    q = _cover(p)
    r = float(q[0])
    if not r > 0:
        raise InputError("linking loops need r > 0")
    found = {}
    for n in classes:
        for sgn in (1, -1):
            found[sgn * n] = clairaut_connect(q, deck(q, sgn * n))
    best = min(found, key=lambda k: (found[k].length, -k))
    g = found[best]
    rm = g.solution.rm
    lower = max(2.0 * (r - rm), abs(best) * rm**3)
    return LinkingLoop(g.curve, best, g.length, {k: v.length for k, v in found.items()}, rm, r**3, lower)


class NonUniqueness(NamedTuple):
    halves: tuple  # two Curves from p to q (cover lifts)
    lengths: tuple
    endpoint: QuotientPoint
    separation: float
    threshold: float
    certified: tuple  # per half: all perturbed comparisons longer
    margins: tuple  # per half: min(perturbed length - length)
    resolve_gap: tuple  # per half: |energy re-solve length - length| / length
    verdict: str


def _polyline_length(P: np.ndarray) -> float:
    return float(np.sum(segment_lengths(PLANE, P)))


def nonunique_geodesics(
    p,
    perturbations: int = 20,
    amplitude: float = 0.05,
    seed: int = 0,
    separation_samples: int = 33,
    resolve: bool = True,
) -> NonUniqueness:
    """Two geodesics of equal length from ``p`` to the far point of its minimal loop.

    The minimal linking loop is bisected at its midpoint ``q``; the second
    half is reversed and untwisted so both halves start at ``p``.  Each half
    is compared with ``perturbations`` perturbed polylines with the same
    endpoints and, optionally, re-solved by the polyline energy solver from a
    perturbed start.
    """
    base = _cover(p)
    r = float(base[0])
    if not 0 < r <= 0.5:
        raise InputError("non-uniqueness is demonstrated for 0 < r <= 0.5")
    loop = minimal_linking_loop(base, classes=(1,))
    n = loop.linking
    mid = loop.curve.at(0.5)
    h1 = clairaut_connect(base, mid)
    h2 = clairaut_connect(base, deck(mid, -n))
    L1, L2 = h1.length, h2.length
    q = QuotientPoint(mid[0], mid[1])

    f = np.linspace(0.0, 1.0, separation_samples)
    A, B = h1.curve.at(f), h2.curve.at(f)
    separation = max(quotient_distance(A[i], B[i]) for i in range(f.size))
    threshold = 0.1 * r**3

    rng = np.random.default_rng(seed)
    fine = np.linspace(0.0, 1.0, 2049)
    certified, margins, gaps = [], [], []
    for h in (h1, h2):
        P0 = h.curve.at(fine)
        span = np.abs(P0[-1] - P0[0])
        scale = np.array([max(span[0], r * 0.05), max(span[1], 0.05)])
        worst = np.inf
        for _ in range(perturbations):
            bump = sum(np.outer(np.sin((j + 1) * np.pi * fine), rng.normal(size=2)) / (j + 1) for j in range(3))
            P = P0 + amplitude * scale * bump
            P[:, 0] = np.maximum(P[:, 0], 0.0)
            worst = min(worst, _polyline_length(P) - h.length)
        certified.append(bool(worst > 0))
        margins.append(float(worst))
        if resolve:
            bump = np.outer(np.sin(np.pi * fine), rng.normal(size=2))
            init = P0 + amplitude * scale * bump
            try:
                e = energy_connect(PLANE, P0[0], P0[-1], initial=init, tol=1e-10)
                gaps.append(abs(e.length - h.length) / h.length)
            except SolverError:
                gaps.append(np.inf)
        else:
            gaps.append(np.nan)
    ok = (all(certified) and separation > threshold and abs(L1 - L2) <= 1e-6 * max(L1, L2)
          and (not resolve or max(gaps) <= 1e-6))
    return NonUniqueness((h1.curve, h2.curve), (L1, L2), q, float(separation), threshold,
                         tuple(certified), tuple(margins), tuple(gaps), "nonunique" if ok else "inconclusive")
