"""Comparison geometry on the model spaces.

Comparison triangles, the CAT(0) distance inequality on sampled side
points, Alexandrov angles, convexity of the displacement function, flat
triangles, the insize of scaled flat triangles, and the maximal rank of a
flat in the completion by exhaustive search over curve systems.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CuspLabError, InputError, UnstableAngleError
from .geodesics import Curve, _cusp_factor, connect, distance
from .metrics import MetricModel

__all__ = [
    "ComparisonTriangle",
    "GeodesicTriangle",
    "comparison_triangle",
    "geodesic_triangle",
    "cat0_check",
    "comparison_angle",
    "alexandrov_angle",
    "convexity_check",
    "flat_triangle_check",
    "thinness_probe",
    "planar_inradius",
    "max_flat_rank",
    "max_flat_rank_search",
]


class ComparisonTriangle(NamedTuple):
    points: np.ndarray  # (3, 2)
    lengths: np.ndarray  # d(A,B), d(B,C), d(C,A)


def comparison_triangle(l1: float, l2: float, l3: float, tol: float = 1e-12) -> ComparisonTriangle:
    """Planar triangle with ``|AB| = l1``, ``|BC| = l2``, ``|CA| = l3``.

    ``A`` sits at the origin and ``B`` on the positive horizontal axis.
    """
    ls = np.array([l1, l2, l3], dtype=float)
    if np.any(ls < 0) or not np.all(np.isfinite(ls)):
        raise InputError("side lengths must be finite and nonnegative")
    slack = tol * max(1.0, ls.max())
    for i in range(3):
        if ls[i] > ls[(i + 1) % 3] + ls[(i + 2) % 3] + slack:
            raise InputError(f"side lengths {tuple(ls)} violate the triangle inequality")
    if l1 == 0.0:
        C = np.array([l3, 0.0])
    else:
        cx = (l1**2 + l3**2 - l2**2) / (2.0 * l1)
        C = np.array([cx, np.sqrt(max(l3**2 - cx**2, 0.0))])
    return ComparisonTriangle(np.array([[0.0, 0.0], [l1, 0.0], C]), ls)


@dataclass(frozen=True, eq=False)
class GeodesicTriangle:
    model: MetricModel
    vertices: np.ndarray  # (3, dim)
    sides: tuple  # curves A->B, B->C, C->A

    @property
    def lengths(self) -> np.ndarray:
        return np.array([s.length for s in self.sides])


def geodesic_triangle(model: MetricModel, a, b, c, strategy: str = "auto") -> GeodesicTriangle:
    verts = np.array([np.asarray(v, dtype=float) for v in (a, b, c)])
    sides = tuple(connect(model, verts[i], verts[(i + 1) % 3], strategy=strategy) for i in range(3))
    return GeodesicTriangle(model, verts, sides)


class Cat0Result(NamedTuple):
    slack: np.ndarray  # (3, grid, grid): side pair, fraction on first, fraction on second
    min_slack: float
    skipped: int


def cat0_check(model: MetricModel, tri: GeodesicTriangle, grid: int = 9, strategy: str = "auto") -> Cat0Result:
    """Comparison distance minus model distance over sampled side points.

    Side pairs are (AB, BC), (BC, CA), (CA, AB).  CAT(0) requires every
    slack to be nonnegative up to tolerance.  Pairs whose distance solve
    fails are skipped and counted.
    """
    comp = comparison_triangle(*tri.lengths)
    f = np.linspace(0.0, 1.0, grid)
    cpts = comp.points
    slack = np.full((3, grid, grid), np.nan)
    skipped = 0
    model_pts = [side.at(f) for side in tri.sides]
    for k in range(3):
        i, j = k, (k + 1) % 3
        ci = cpts[i] + f[:, None] * (cpts[(i + 1) % 3] - cpts[i])
        cj = cpts[j] + f[:, None] * (cpts[(j + 1) % 3] - cpts[j])
        for a in range(grid):
            for b in range(grid):
                pa, pb = model_pts[i][a].copy(), model_pts[j][b].copy()
                pa[model.r_slice] = np.maximum(pa[model.r_slice], 0.0)
                pb[model.r_slice] = np.maximum(pb[model.r_slice], 0.0)
                if a == grid - 1 and b == 0:
                    slack[k, a, b] = 0.0  # shared vertex
                    continue
                try:
                    d = distance(model, pa, pb, strategy=strategy)
                except CuspLabError:
                    skipped += 1
                    continue
                slack[k, a, b] = np.linalg.norm(ci[a] - cj[b]) - d
    return Cat0Result(slack, float(np.nanmin(slack)), skipped)


def comparison_angle(a: float, b: float, c: float) -> float:
    """Euclidean angle between sides ``a`` and ``b`` opposite ``c``."""
    if a <= 0 or b <= 0:
        raise InputError("adjacent sides must be positive")
    cosine = (a * a + b * b - c * c) / (2.0 * a * b)
    return float(np.arccos(np.clip(cosine, -1.0, 1.0)))


class AngleResult(NamedTuple):
    angle: float
    params: np.ndarray
    comparison_angles: np.ndarray
    monotone: bool


def alexandrov_angle(
    model: MetricModel,
    side1: Curve,
    side2: Curve,
    t0: float | None = None,
    levels: int = 14,
    tol: float = 1e-7,
    monotone_tol: float = 1e-6,
    strategy: str = "auto",
) -> AngleResult:
    """Angle at the common start point of two geodesics.

    Comparison angles are taken at arclength ``t = t0 2^-j`` and combined by
    a two-point Richardson step.  The order used in that step is estimated
    from three consecutive angles (smooth models give order two) and
    clipped to [1, 4].  ``monotone`` is True when the comparison angles do
    not increase under refinement of ``t``, as CAT(0) requires.
    """
    if not np.allclose(side1.start, side2.start, atol=1e-12):
        raise InputError("the two sides must start at the same vertex")
    L1, L2 = side1.length, side2.length
    if not (L1 and L2):
        raise InputError("sides need known positive lengths")
    t0 = 0.5 * min(L1, L2) if t0 is None else t0
    params, angles, extrap = [], [], []
    for j in range(levels):
        t = t0 * 2.0**-j
        pa, pb = side1.at(t / L1), side2.at(t / L2)
        d = distance(model, pa, pb, strategy=strategy)
        params.append(t)
        angles.append(2.0 * np.arcsin(min(1.0, d / (2.0 * t))))
        if j >= 2:
            prev, last = angles[-2] - angles[-3], angles[-1] - angles[-2]
            if abs(last) <= 1e-15:
                extrap.append(angles[-1])
            else:
                order = np.clip(np.log2(abs(prev / last)) if prev != 0 else 1.0, 1.0, 4.0)
                extrap.append(angles[-1] + last / (2.0**order - 1.0))
        if len(extrap) >= 2 and abs(extrap[-1] - extrap[-2]) < tol:
            break
    else:
        raise UnstableAngleError("comparison angles did not stabilize", angles=np.array(angles), params=np.array(params))
    angles = np.array(angles)
    monotone = bool(np.all(np.diff(angles) <= monotone_tol))
    return AngleResult(float(extrap[-1]), np.array(params), angles, monotone)


def _displacement(model, g1: Curve, g2: Curve, samples: int, strategy: str) -> tuple[np.ndarray, np.ndarray]:
    f = np.linspace(0.0, 1.0, samples)
    A, B = g1.at(f), g2.at(f)
    for X in (A, B):
        X[:, model.r_slice] = np.maximum(X[:, model.r_slice], 0.0)
    return f, np.array([distance(model, A[i], B[i], strategy=strategy) for i in range(samples)])


class ConvexityResult(NamedTuple):
    min_second_difference: float
    second_differences: np.ndarray
    displacement: np.ndarray


def convexity_check(model: MetricModel, g1: Curve, g2: Curve, samples: int = 17, strategy: str = "auto") -> ConvexityResult:
    """Second differences of ``t -> d(g1(t), g2(t))`` on a uniform grid."""
    _, d = _displacement(model, g1, g2, samples, strategy)
    second = d[:-2] - 2.0 * d[1:-1] + d[2:]
    return ConvexityResult(float(second.min()), second, d)


class FlatVerdict(NamedTuple):
    flat: bool
    deviation: float  # max deviation of a vertex displacement from its chord
    deviations: np.ndarray
    factor_defects: dict  # factor label -> triangle-inequality defect of the projection


def _factor_distance(model, factor, a, b) -> float:
    ia = list(factor.index)
    if factor.kind == "plane":
        return float(np.linalg.norm(a[ia] - b[ia]))
    if factor.kind == "cusp":
        return float(_cusp_factor(model.scale, a[ia[0]], a[ia[1]], b[ia[0]], b[ia[1]])[0])
    return float("nan")


def flat_triangle_check(model: MetricModel, tri: GeodesicTriangle, samples: int = 17, tol: float = 1e-8, strategy: str = "auto") -> FlatVerdict:
    """Flatness via linearity of the displacement between sides at each vertex.

    For two sides leaving a vertex, parameterized proportionally on [0, 1],
    ``t -> d(g1(t), g2(t))`` equals ``t d(g1(1), g2(1))`` exactly when the
    triangle spans a flat.  The projections to each product factor are also
    tested for collinearity (a zero triangle-inequality defect).
    """
    AB, BC, CA = tri.sides
    pairs = [(AB, CA.reversed()), (BC, AB.reversed()), (CA, BC.reversed())]
    f = np.linspace(0.0, 1.0, samples)
    devs = []
    for g1, g2 in pairs:
        _, d = _displacement(model, g1, g2, samples, strategy)
        devs.append(float(np.max(np.abs(d - f * d[-1]))))
    devs = np.array(devs)
    scale = max(1.0, float(tri.lengths.sum()))
    defects = {}
    for factor in model.factors():
        sides = [_factor_distance(model, factor, tri.vertices[i], tri.vertices[(i + 1) % 3]) for i in range(3)]
        s = sorted(sides)
        defects[f"{factor.kind}{factor.index}"] = s[0] + s[1] - s[2]
    return FlatVerdict(bool(devs.max() <= tol * scale), float(devs.max()), devs, defects)


# ---------------------------------------------------------------------------
# insize of flat triangles


def planar_inradius(a: float, b: float, c: float) -> float:
    """Inradius from side lengths (Heron)."""
    s = 0.5 * (a + b + c)
    area_sq = s * (s - a) * (s - b) * (s - c)
    return float(np.sqrt(max(area_sq, 0.0)) / s) if s > 0 else 0.0


_SHAPES = {
    "equilateral": np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]]),
    "right_isoceles": np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
}


class ThinnessResult(NamedTuple):
    insize_unit: float  # inradius of the side-1 (leg-1) triangle
    insize_scaled: np.ndarray  # inradius at each probe scale
    scales: np.ndarray
    threshold: float  # smallest scale with insize > delta
    slim_unit: float  # max distance from a side point to the other two sides


def _side_distance(model, p, a, b, strategy):
    # distance from p to the segment a -> b in a flat plane of the model
    f = lambda u: distance(model, p, a + u * (b - a), strategy=strategy)  # noqa: E731
    grid = np.linspace(0.0, 1.0, 17)
    vals = [f(u) for u in grid]
    i = int(np.argmin(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, 16)]
    res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(float(res.fun), min(vals))


def thinness_probe(
    model: MetricModel,
    delta: float = 1.0,
    shape: str = "equilateral",
    scales: Sequence[float] = (1.0, 2.0, 4.0),
    plane: tuple = (0, 1),
    base=None,
    strategy: str = "auto",
    slim_samples: int = 9,
) -> ThinnessResult:
    """Insize of scaled triangles in a Euclidean 2-plane of the model.

    The insize is the inradius computed from model side lengths; it scales
    linearly, so the first scale exceeding ``delta`` is ``delta / insize(1)``.
    """
    if model.m2 < 2:
        raise InputError("thinness probe needs a Euclidean block")
    if shape not in _SHAPES:
        raise InputError(f"unknown shape {shape!r}")
    q0 = np.zeros(model.dim) if base is None else np.asarray(base, float)
    q0 = q0.copy()
    q0[model.r_slice] = np.where(q0[model.r_slice] > 0, q0[model.r_slice], 0.5)

    def vertices(s):
        V = np.tile(q0, (3, 1))
        V[:, plane[0]] += s * _SHAPES[shape][:, 0]
        V[:, plane[1]] += s * _SHAPES[shape][:, 1]
        return V

    def inradius(s):
        V = vertices(s)
        sides = [distance(model, V[i], V[(i + 1) % 3], strategy=strategy) for i in range(3)]
        return planar_inradius(*sides)

    scales = np.asarray(scales, dtype=float)
    ins = np.array([inradius(s) for s in scales])
    unit = inradius(1.0)
    V = vertices(1.0)
    slim = 0.0
    for i in range(3):
        a, b = V[i], V[(i + 1) % 3]
        others = [(V[(i + 1) % 3], V[(i + 2) % 3]), (V[(i + 2) % 3], V[i])]
        for u in np.linspace(0.0, 1.0, slim_samples):
            p = a + u * (b - a)
            slim = max(slim, min(_side_distance(model, p, x, y, strategy) for x, y in others))
    return ThinnessResult(unit, ins, scales, float(delta / unit), float(slim))


# ---------------------------------------------------------------------------
# flat rank


def max_flat_rank(g: int, n: int) -> int:
    """Maximal dimension of a locally Euclidean subspace: ``g - 1 + floor((g + n) / 2)``."""
    if not (isinstance(g, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise InputError("g and n must be integers")
    if g < 0 or n < 0 or 3 * g - 3 + n <= 0:
        raise InputError("need g, n >= 0 and 3g - 3 + n > 0")
    return int(g - 1 + (g + n) // 2)


def _realizable(degrees: Sequence[int]) -> bool:
    # a connected multigraph with loops and the given degree sequence exists
    P = len(degrees)
    if P == 1:
        return True
    return all(d >= 1 for d in degrees) and sum(degrees) >= 2 * (P - 1)


@lru_cache(maxsize=None)
def _decompositions(g: int, n: int) -> tuple:
    """All piece multisets ``((g_i, n_i, d_i), ...)`` of a genus-g surface with n punctures.

    ``n_i`` counts punctures and ``d_i`` sides of cutting curves on piece i.
    Every piece is stable, ``sum n_i = n``, ``sum d_i = 2k`` for k curves,
    the gluing graph is connected and ``g = sum g_i + k - P + 1``.
    """
    out = []
    kmax = 3 * g - 3 + n
    for k in range(kmax + 1):
        pieces = [
            (gi, ni, di)
            for gi in range(g + 1)
            for ni in range(n + 1)
            for di in range(2 * k + 1)
            if 2 * gi - 2 + ni + di > 0
        ]
        pieces.sort()

        def extend(start, chosen, sum_g, sum_n, sum_d, neg_chi):
            P = len(chosen)
            if P and sum_n == n and sum_d == 2 * k and sum_g + k - P + 1 == g:
                if _realizable([c[2] for c in chosen]):
                    out.append((k, tuple(chosen)))
            for idx in range(start, len(pieces)):
                gi, ni, di = pieces[idx]
                chi = 2 * gi - 2 + ni + di
                if sum_n + ni > n or sum_d + di > 2 * k or neg_chi + chi > 2 * g - 2 + n or sum_g + gi > g:
                    continue
                chosen.append(pieces[idx])
                extend(idx, chosen, sum_g + gi, sum_n + ni, sum_d + di, neg_chi + chi)
                chosen.pop()

        extend(0, [], 0, 0, 0, 0)
    return tuple(out)


def flat_count(pieces) -> int:
    """Number of pieces that are not thrice-punctured spheres."""
    return sum(1 for gi, ni, di in pieces if not (gi == 0 and ni + di == 3))


def max_flat_rank_search(g: int, n: int) -> tuple[int, tuple]:
    """Brute-force maximum of ``nu`` over all curve systems; returns ``(nu, witness)``."""
    if g < 0 or n < 0 or 3 * g - 3 + n <= 0:
        raise InputError("need g, n >= 0 and 3g - 3 + n > 0")
    best, witness = -1, None
    for k, pieces in _decompositions(g, n):
        nu = flat_count(pieces)
        if nu > best:
            best, witness = nu, (k, pieces)
    return best, witness
