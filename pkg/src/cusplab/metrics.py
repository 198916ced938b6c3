"""Model metric tensors, Christoffel symbols and curvature.

Every model is diagonal in the mixed chart.  Coordinates are stored as
one flat vector ordered ``(x_1..x_2m, r_1..r_n, theta_1..theta_n)`` so the
same layout is shared by the solvers, the strata helpers and the CLI.

The cuspidal factor with scale ``s`` is ``s (4 dr^2 + r^6 dtheta^2)``; it is
isometric to the surface of revolution of ``y = (x/2)^3`` up to the
``(1 + 9x^4/64)`` stretch of the meridian.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InputError, SingularPointError

__all__ = [
    "ChartPoint",
    "TangentVector",
    "Factor",
    "MetricModel",
    "EuclideanBlock",
    "ProductCuspidal",
    "CuspidalPlane",
    "PerturbedProduct",
    "SpherePatch",
    "AnnulusHyperbolic",
    "PerturbationProfile",
    "PROFILES",
    "get_profile",
    "eval_metric",
    "christoffel",
    "gaussian_curvature",
    "annulus_density",
    "density_series_check",
    "revolution_surface_compare",
]


def _as_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ChartPoint:
    """A point of the mixed chart: Euclidean block ``x`` and polar cusp pairs."""

    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    r: np.ndarray = field(default_factory=lambda: np.zeros(0))
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        x, r, th = _as_array(self.x, "x"), _as_array(self.r, "r"), _as_array(self.theta, "theta")
        if r.shape != th.shape:
            raise InputError(f"r and theta must have equal length, got {r.size} and {th.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r)) and np.all(np.isfinite(th))):
            raise InputError("chart coordinates must be finite")
        if np.any(r < 0):
            raise InputError("radial coordinates must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", th)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.r, self.theta])

    @classmethod
    def from_vector(cls, vec, m2: int, n: int) -> "ChartPoint":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (m2 + 2 * n,):
            raise InputError(f"expected a vector of length {m2 + 2 * n}, got shape {vec.shape}")
        r = np.where(vec[m2:m2 + n] < 0, 0.0, vec[m2:m2 + n])
        return cls(vec[:m2], r, vec[m2 + n:])


@dataclass(frozen=True, eq=False)
class TangentVector:
    dx: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dr: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dtheta: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        dx, dr, dth = _as_array(self.dx, "dx"), _as_array(self.dr, "dr"), _as_array(self.dtheta, "dtheta")
        if dr.shape != dth.shape:
            raise InputError("dr and dtheta must have equal length")
        object.__setattr__(self, "dx", dx)
        object.__setattr__(self, "dr", dr)
        object.__setattr__(self, "dtheta", dth)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.dx, self.dr, self.dtheta])

    @classmethod
    def from_vector(cls, vec, m2: int, n: int) -> "TangentVector":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (m2 + 2 * n,):
            raise InputError(f"expected a vector of length {m2 + 2 * n}, got shape {vec.shape}")
        return cls(vec[:m2], vec[m2:m2 + n], vec[m2 + n:])


class Factor(NamedTuple):
    """One factor of a product model, used for factor-wise curvature terms.

    ``kind`` is ``"plane"`` (a flat coordinate plane of the Euclidean block),
    ``"cusp"`` or ``"sphere"``; ``index`` lists the coordinate positions.
    """

    kind: str
    index: tuple


# ---------------------------------------------------------------------------
# perturbation profiles


@dataclass(frozen=True)
class PerturbationProfile:
    """A scalar field ``p(x, r, theta)`` with ``|p| <= bound * ||r||^3``.

    ``value`` and ``gradient`` take the split coordinate arrays (last axis is
    the coordinate index) and broadcast over leading axes.  ``gradient``
    returns the triple ``(dp/dx, dp/dr, dp/dtheta)``.
    """

    name: str
    value: Callable
    gradient: Callable
    bound: float


def _default_value(x, r, th):
    wobble = 0.5 * np.sin(x[..., :1]).sum(axis=-1) if x.shape[-1] else 0.0
    return np.sum(r**3 * (1.0 + 0.5 * np.cos(th)), axis=-1) + np.sum(r**3, axis=-1) * wobble


def _default_gradient(x, r, th):
    cube = np.sum(r**3, axis=-1)
    gx = np.zeros_like(x)
    if x.shape[-1]:
        wobble = 0.5 * np.sin(x[..., 0])
        gx[..., 0] = 0.5 * np.cos(x[..., 0]) * cube
    else:
        wobble = np.zeros_like(cube)
    gr = 3.0 * r**2 * (1.0 + 0.5 * np.cos(th) + np.asarray(wobble)[..., None])
    gth = -0.5 * r**3 * np.sin(th)
    return gx, gr, gth


def _radial_value(x, r, th):
    return np.sum(r**3, axis=-1)


def _radial_gradient(x, r, th):
    return np.zeros_like(x), 3.0 * r**2, np.zeros_like(th)


def _zero_value(x, r, th):
    return np.zeros(np.broadcast_shapes(r.shape[:-1], th.shape[:-1]))


def _zero_gradient(x, r, th):
    return np.zeros_like(x), np.zeros_like(r), np.zeros_like(th)


PROFILES = {
    # sum_k r_k^3 (1 + cos(theta_k)/2 + sin(x_1)/2): nonnegative, bound 2
    "default": PerturbationProfile("default", _default_value, _default_gradient, 2.0),
    "radial": PerturbationProfile("radial", _radial_value, _radial_gradient, 1.0),
    "zero": PerturbationProfile("zero", _zero_value, _zero_gradient, 0.0),
}


def get_profile(profile) -> PerturbationProfile:
    if isinstance(profile, PerturbationProfile):
        return profile
    try:
        return PROFILES[profile]
    except KeyError:
        raise InputError(f"unknown perturbation profile {profile!r}; choose from {sorted(PROFILES)}") from None


# ---------------------------------------------------------------------------
# models


class MetricModel:
    """Base class for the diagonal model metrics.

    Subclasses provide ``diag(q)`` (the diagonal of g at flat coordinate
    vectors ``q`` of shape ``(..., dim)``) and ``diag_grad(q)`` with
    ``diag_grad(q)[..., i, j] = d g_ii / d q_j``.
    """

    m2: int = 0
    n: int = 0
    name: str = "model"

    @property
    def dim(self) -> int:
        return self.m2 + 2 * self.n

    @property
    def r_slice(self) -> slice:
        return slice(self.m2, self.m2 + self.n)

    @property
    def theta_slice(self) -> slice:
        return slice(self.m2 + self.n, self.m2 + 2 * self.n)

    def diag(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def diag_grad(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def lower_bounds(self) -> np.ndarray:
        lo = np.full(self.dim, -np.inf)
        lo[self.r_slice] = 0.0
        return lo

    def upper_bounds(self) -> np.ndarray:
        return np.full(self.dim, np.inf)

    def factors(self) -> list[Factor]:
        raise NotImplementedError

    def singular(self, q: np.ndarray) -> bool:
        """True when ``q`` lies off the smooth locus."""
        return bool(np.any(np.asarray(q)[self.r_slice] <= 0.0))

    def point(self, x=(), r=(), theta=()) -> ChartPoint:
        p = ChartPoint(np.zeros(self.m2) if len(x) == 0 else x, r, theta)
        self.check(p)
        return p

    def check(self, p: ChartPoint) -> None:
        if p.x.size != self.m2 or p.r.size != self.n:
            raise InputError(
                f"{self.name} expects {self.m2} Euclidean and {self.n} cusp coordinates, "
                f"got {p.x.size} and {p.r.size}"
            )

    def vector(self, p: ChartPoint) -> np.ndarray:
        self.check(p)
        return p.vector

    def to_point(self, vec) -> ChartPoint:
        return ChartPoint.from_vector(vec, self.m2, self.n)

    def norm(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.sum(self.diag(q) * np.asarray(v) ** 2, axis=-1))


@dataclass(frozen=True)
class EuclideanBlock(MetricModel):
    m: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise InputError("EuclideanBlock needs m >= 1")
        object.__setattr__(self, "m2", 2 * self.m)
        object.__setattr__(self, "n", 0)
        object.__setattr__(self, "name", f"EuclideanBlock(m={self.m})")

    def diag(self, q):
        return np.ones(np.shape(q))

    def diag_grad(self, q):
        q = np.asarray(q)
        return np.zeros(q.shape + (q.shape[-1],))

    def factors(self):
        return [Factor("plane", (2 * i, 2 * i + 1)) for i in range(self.m)]


@dataclass(frozen=True)
class ProductCuspidal(MetricModel):
    """``dx^2 + s * sum_k (4 dr_k^2 + r_k^6 dtheta_k^2)``."""

    m: int = 0
    ncusp: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.m < 0 or self.ncusp < 1:
            raise InputError("ProductCuspidal needs m >= 0 and at least one cusp factor")
        if not self.scale > 0:
            raise InputError("scale must be positive")
        object.__setattr__(self, "m2", 2 * self.m)
        object.__setattr__(self, "n", self.ncusp)
        object.__setattr__(self, "name", f"ProductCuspidal(m={self.m}, n={self.ncusp}, s={self.scale:g})")

    def diag(self, q):
        q = np.asarray(q, dtype=float)
        g = np.ones(q.shape)
        r = q[..., self.r_slice]
        g[..., self.r_slice] = 4.0 * self.scale
        g[..., self.theta_slice] = self.scale * r**6
        return g

    def diag_grad(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (q.shape[-1],))
        r = q[..., self.r_slice]
        for k in range(self.n):
            out[..., self.m2 + self.n + k, self.m2 + k] = 6.0 * self.scale * r[..., k] ** 5
        return out

    def factors(self):
        planes = [Factor("plane", (2 * i, 2 * i + 1)) for i in range(self.m)]
        cusps = [Factor("cusp", (self.m2 + k, self.m2 + self.n + k)) for k in range(self.n)]
        return planes + cusps


@dataclass(frozen=True)
class CuspidalPlane(ProductCuspidal):
    """The single cusp factor ``s (4 dr^2 + r^6 dtheta^2)``."""

    def __init__(self, scale: float = 1.0):
        super().__init__(m=0, ncusp=1, scale=scale)

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "name", f"CuspidalPlane(s={self.scale:g})")

    def __repr__(self):
        return self.name


@dataclass(frozen=True)
class PerturbedProduct(MetricModel):
    """``base * (1 + epsilon * p)`` for a ProductCuspidal base."""

    base: ProductCuspidal = field(default_factory=ProductCuspidal)
    epsilon: float = 0.1
    profile: PerturbationProfile | str = "default"

    def __post_init__(self):
        if not isinstance(self.base, ProductCuspidal):
            raise InputError("PerturbedProduct base must be a ProductCuspidal")
        prof = get_profile(self.profile)
        object.__setattr__(self, "profile", prof)
        object.__setattr__(self, "m2", self.base.m2)
        object.__setattr__(self, "n", self.base.n)
        object.__setattr__(self, "name", f"PerturbedProduct({self.base.name}, eps={self.epsilon:g}, {prof.name})")

    @property
    def bound(self) -> float:
        """The constant ``C`` in ``|p| <= C ||r||^3``."""
        return self.profile.bound

    def _split(self, q):
        return q[..., : self.m2], q[..., self.r_slice], q[..., self.theta_slice]

    def factor(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        return 1.0 + self.epsilon * self.profile.value(*self._split(q))

    def diag(self, q):
        q = np.asarray(q, dtype=float)
        return self.base.diag(q) * self.factor(q)[..., None]

    def diag_grad(self, q):
        q = np.asarray(q, dtype=float)
        f = self.factor(q)
        gx, gr, gth = self.profile.gradient(*self._split(q))
        dp = np.concatenate([np.broadcast_to(gx, q.shape[:-1] + (self.m2,)), gr, gth], axis=-1)
        return self.base.diag_grad(q) * f[..., None, None] + self.epsilon * self.base.diag(q)[..., :, None] * dp[..., None, :]

    def factors(self):
        return self.base.factors()


@dataclass(frozen=True)
class SpherePatch(MetricModel):
    """``R^2 (dphi^2 + sin^2 phi dtheta^2)`` with phi stored in the r slot."""

    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError("radius must be positive")
        object.__setattr__(self, "m2", 0)
        object.__setattr__(self, "n", 1)
        object.__setattr__(self, "name", f"SpherePatch(R={self.radius:g})")

    def diag(self, q):
        q = np.asarray(q, dtype=float)
        R2 = self.radius**2
        return np.stack([np.full(q.shape[:-1], R2), R2 * np.sin(q[..., 0]) ** 2], axis=-1)

    def diag_grad(self, q):
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 1, 0] = self.radius**2 * np.sin(2.0 * q[..., 0])
        return out

    def upper_bounds(self):
        return np.array([np.pi, np.inf])

    def singular(self, q):
        phi = np.asarray(q)[0]
        return bool(phi <= 0.0 or phi >= np.pi)

    def factors(self):
        return [Factor("sphere", (0, 1))]


@dataclass(frozen=True)
class AnnulusHyperbolic:
    """Complete hyperbolic metric on ``{|t| < |z| < 1}`` (cusp branch at t = 0).

    Only the conformal density is provided; the annulus is a fiber model and
    does not enter the product chart.
    """

    t: complex = 0.0

    def __post_init__(self):
        if not abs(self.t) < 1:
            raise InputError("annulus parameter needs |t| < 1")

    def density(self, z) -> float:
        return annulus_density(self.t, z)


# ---------------------------------------------------------------------------
# operations


def _chart_vector(model: MetricModel, p) -> np.ndarray:
    if isinstance(model, AnnulusHyperbolic):
        raise InputError("AnnulusHyperbolic provides a density only; use annulus_density")
    if isinstance(p, ChartPoint):
        return model.vector(p)
    q = np.asarray(p, dtype=float)
    if q.shape != (model.dim,):
        raise InputError(f"{model.name} expects a coordinate vector of length {model.dim}")
    return q


def eval_metric(model: MetricModel, p) -> np.ndarray:
    """Metric matrix at ``p`` in the fixed (x, r, theta) ordering.

    At a cusp point ``r_k = 0`` the theta_k row and column are literally zero.
    """
    return np.diag(model.diag(_chart_vector(model, p)))


def _require_smooth(model: MetricModel, q: np.ndarray) -> None:
    if model.singular(q):
        raise SingularPointError(f"{model.name}: point {q} is not in the smooth locus")


def _central(f, q, i, h):
    e = np.zeros_like(q)
    e[i] = h
    return (f(q + e) - f(q - e)) / (2.0 * h)


def fd_derivative(f, q, i, h):
    """Central difference in coordinate ``i`` with one Richardson step."""
    coarse = _central(f, q, i, h)
    fine = _central(f, q, i, 0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def fd_step(model: MetricModel, q: np.ndarray) -> float:
    r = np.asarray(q)[model.r_slice]
    return 1e-5 * max(1.0, float(r.min()) if r.size else 1.0)


def christoffel(model: MetricModel, p, method: str = "analytic") -> np.ndarray:
    """Christoffel symbols ``G[i, j, k] = Gamma^i_{jk}``.

    ``method="analytic"`` uses the model's closed-form metric derivative;
    ``method="fd"`` differentiates ``eval_metric`` by Richardson-extrapolated
    central differences (step ``1e-5 * max(1, r_min)``).
    """
    q = _chart_vector(model, p)
    _require_smooth(model, q)
    if method == "analytic":
        g = model.diag(q)
        dg = model.diag_grad(q)  # dg[i, j] = d_j g_ii
        D = q.size
        G = np.zeros((D, D, D))
        for i in range(D):
            G[i, i, :] += 0.5 * dg[i, :] / g[i]
            G[i, :, i] += 0.5 * dg[i, :] / g[i]
            G[i, i, i] -= 0.5 * dg[i, i] / g[i]
            for j in range(D):
                if j != i:
                    G[i, j, j] -= 0.5 * dg[j, i] / g[i]
        return G
    if method == "fd":
        h = fd_step(model, q)
        metric = lambda y: eval_metric(model, y)  # noqa: E731
        dG = np.stack([fd_derivative(metric, q, k, h) for k in range(q.size)], axis=-1)  # dG[i,j,k] = d_k g_ij
        ginv = np.linalg.inv(eval_metric(model, q))
        # lowered[l, j, k] = (d_k g_lj + d_j g_lk - d_l g_jk) / 2
        lowered = 0.5 * (np.einsum("ljk->ljk", dG) + np.einsum("lkj->ljk", dG) - np.einsum("jkl->ljk", dG))
        return np.einsum("il,ljk->ijk", ginv, lowered)
    raise InputError(f"unknown method {method!r}")


def gaussian_curvature(model: MetricModel, p) -> float:
    """Gaussian curvature of a two-dimensional model by Brioschi's formula.

    For an orthogonal chart ``E du^2 + G dv^2``:
    ``K = -(d_u(G_u / W) + d_v(E_v / W)) / (2 W)`` with ``W = sqrt(E G)``.
    The inner derivatives are analytic and the outer ones are
    Richardson-extrapolated central differences.
    """
    if isinstance(model, AnnulusHyperbolic) or model.dim != 2:
        raise InputError("gaussian_curvature needs a two-dimensional model")
    q = _chart_vector(model, p)
    _require_smooth(model, q)

    def flux(y, i):
        g = model.diag(y)
        dg = model.diag_grad(y)
        W = np.sqrt(g[0] * g[1])
        # i = 0: G_u / W ; i = 1: E_v / W
        return dg[1, 0] / W if i == 0 else dg[0, 1] / W

    r_scale = abs(q[0]) if q[0] != 0 else 1.0
    h = 1e-3 * min(1.0, r_scale)
    total = sum(fd_derivative(lambda y: flux(y, i), q, i, h) for i in range(2))
    g = model.diag(q)
    return float(-total / (2.0 * np.sqrt(g[0] * g[1])))


def annulus_density(t, z) -> float:
    """Hyperbolic density relative to ``|dz|``.

    ``t != 0``: ``(pi / |log|t||) csc(Theta) / |z|`` with
    ``Theta = pi log|z| / log|t|``; ``t = 0``: ``1 / (|z| |log|z||)``.
    """
    at, az = abs(t), abs(z)
    if not at < 1:
        raise InputError("annulus parameter needs |t| < 1")
    if at == 0:
        if not 0 < az < 1:
            raise InputError("z must satisfy 0 < |z| < 1 for the punctured disc")
        return 1.0 / (az * abs(np.log(az)))
    if not at < az < 1:
        raise InputError("z must satisfy |t| < |z| < 1")
    L = np.log(at)
    Theta = np.pi * np.log(az) / L
    return float((np.pi / abs(L)) / np.sin(Theta) / az)


def density_series_check(Theta: float) -> tuple[float, float, float]:
    """``(Theta csc Theta)^2`` against ``1 + Theta^2/3 + Theta^4/15``."""
    if not 0 < Theta < np.pi:
        raise InputError("Theta must lie in (0, pi)")
    exact = (Theta / np.sin(Theta)) ** 2
    truncated = 1.0 + Theta**2 / 3.0 + Theta**4 / 15.0
    return float(exact), float(truncated), float(exact - truncated)


def revolution_surface_compare(r: float) -> tuple[float, float]:
    """Coefficient ratios of the revolution surface of ``y = (x/2)^3`` to the cusp.

    With ``x = 2r`` the surface metric is ``(1 + y'(x)^2) dx^2 + y(x)^2 dtheta^2``;
    returns ``(rr_ratio, theta_theta_ratio)`` relative to ``4 dr^2 + r^6 dtheta^2``.
    """
    if r < 0:
        raise InputError("r must be nonnegative")
    x = 2.0 * r
    dy = 3.0 * x**2 / 8.0
    rr = (1.0 + dy**2) * 4.0  # dx = 2 dr
    # y = (x/2)^3 and x/2 = r: compare the bases to avoid underflow in r^6
    return float(rr / 4.0), (float(((x / 2.0) / r) ** 6) if r > 0 else 1.0)
