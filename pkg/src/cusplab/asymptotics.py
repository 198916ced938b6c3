"""Numerical checks of the analytic ingredients behind the metric expansion.

The collar norm integral, the plumbing pairing with a radial Beltrami
profile, the determinant/inverse asymptotics of matrices with a few huge
diagonal entries, the diagonal entry model and its normal form in
``(r, theta)`` coordinates.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import InputError, SolverError
from .quadrature import legendre_nodes

__all__ = [
    "AsymptoticReport",
    "collar_norm_integral",
    "collar_report",
    "PairingProfile",
    "smooth_profile",
    "plumbing_pairing",
    "BlockMatrix",
    "random_block_matrix",
    "block_det_asymptotics",
    "block_inverse_check",
    "InverseReport",
    "block_ensemble",
    "EnsembleCheck",
    "block_bounds_check",
    "wp_entry_model",
    "normal_form_check",
    "r_from_t",
    "rho_metric",
    "rho_from_r",
]

PI3 = np.pi**3
BOUND_CLASSES = ("det", "diagonal", "lambda_lambda", "mixed", "b_block")


@dataclass
class AsymptoticReport:
    grid: list
    measured: list
    reference: list
    residual: list
    fitted: dict = field(default_factory=dict)
    rho: list | None = None

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# collar integral


def collar_norm_integral(k: float, alpha: int = 0, c: float = np.exp(-1.0), nodes: int = 64) -> float:
    """``(2/pi) int (log|t| sin(pi log r / log|t|))^2 r^(2 alpha) dlog r`` over ``|t|/c < r < c``.

    With ``|t| = e^-k`` and ``v = log r / log|t|`` this is
    ``(2/pi) k^3 int_eps^(1-eps) sin^2(pi v) exp(-2 alpha k v) dv`` with
    ``eps = -log(c) / k``.
    """
    if not 0.0 < c < 1.0:
        raise InputError("cutoff c must lie in (0, 1)")
    if alpha < 0 or int(alpha) != alpha:
        raise InputError("alpha must be a nonnegative integer")
    cut = -np.log(c)
    if not k > 2.0 * cut:
        raise InputError(f"need k > 2 (-log c) = {2.0 * cut:g}, got {k}")
    eps = cut / k
    panels = max(8, int(np.ceil(alpha * k / 4.0)))
    v, w = legendre_nodes(np.linspace(eps, 1.0 - eps, panels + 1), nodes)
    val = np.sum(w * np.sin(np.pi * v) ** 2 * np.exp(-2.0 * alpha * k * v))
    return float(2.0 / np.pi * k**3 * val)


def collar_report(ks: Sequence[float], alpha: int = 0, c: float = np.exp(-1.0)) -> AsymptoticReport:
    """Collar integrals against the leading term ``k^3 / pi`` (``alpha = 0``) or 0."""
    ks = [float(k) for k in ks]
    meas = [collar_norm_integral(k, alpha, c) for k in ks]
    ref = [k**3 / np.pi if alpha == 0 else 0.0 for k in ks]
    res = [m - r for m, r in zip(meas, ref)]
    fitted = {"max_abs_residual": float(np.max(np.abs(res)))}
    if alpha == 0:
        fitted["offset_at_largest_k"] = res[int(np.argmax(ks))]
    return AsymptoticReport(ks, meas, ref, res, fitted, [k**-2 for k in ks])


# ---------------------------------------------------------------------------
# plumbing pairing


@dataclass(frozen=True)
class PairingProfile:
    """Radial profile ``psi`` on [0, 1] with its derivative; ``psi(1)`` must be 1."""

    name: str
    psi: Callable[[np.ndarray], np.ndarray]
    dpsi: Callable[[np.ndarray], np.ndarray]
    breaks: tuple = ()


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_profile(a: float = 0.2, b: float = 0.8) -> PairingProfile:
    """C-infinity step: 0 on [0, a], 1 on [b, 1]."""
    if not 0.0 < a < b < 1.0:
        raise InputError("smooth profile needs 0 < a < b < 1")
    width = b - a

    def psi(v):
        s = (np.asarray(v, dtype=float) - a) / width
        ha, hb = _h(s), _h(1.0 - s)
        return ha / (ha + hb)

    def dpsi(v):
        s = (np.asarray(v, dtype=float) - a) / width
        ha, hb = _h(s), _h(1.0 - s)
        with np.errstate(divide="ignore", invalid="ignore"):
            da = np.where(s > 0, ha / np.where(s > 0, s, 1.0) ** 2, 0.0)
            db = np.where(s < 1, hb / np.where(s < 1, 1.0 - s, 1.0) ** 2, 0.0)
        return (da * hb + ha * db) / (ha + hb) ** 2 / width

    return PairingProfile(f"smooth({a:g},{b:g})", psi, dpsi, (a, b))


def plumbing_pairing(t: complex, alpha: int = 0, profile: PairingProfile | None = None,
                     nodes: int = 48, angles: int = 64) -> complex:
    """``int (z^alpha / (2 z zbar)) d(beta log r)/dlog r dE`` over ``|t| < |z| < 1``.

    The profile is ``beta(r) = psi(log r / log|t|) / (t log|t|)``.  The radial
    variable ``u = log r`` uses composite Gauss-Legendre split at the profile
    breakpoints; the angle uses the trapezoid rule.
    """
    t = complex(t)
    if not 0.0 < abs(t) < 1.0:
        raise InputError("need 0 < |t| < 1")
    if int(alpha) != alpha:
        raise InputError("alpha must be an integer")
    if abs(alpha) >= angles // 2:
        raise InputError("too few angular nodes for this alpha")
    profile = smooth_profile() if profile is None else profile
    if abs(float(profile.psi(np.array([1.0]))[0]) - 1.0) > 1e-14:
        raise InputError(f"profile {profile.name} violates the boundary normalization psi(1) = 1")
    ell = np.log(abs(t))
    vb = sorted({0.0, 1.0, *[float(b) for b in profile.breaks]})
    edges = [ell * v for v in reversed(vb)]  # ell < ... < 0
    u, wu = legendre_nodes(edges, nodes)
    phi = 2.0 * np.pi * np.arange(angles) / angles
    wphi = 2.0 * np.pi / angles
    v = u / ell
    d_beta_log = (profile.psi(v) + v * profile.dpsi(v)) / (t * ell)
    r = np.exp(u)
    z = r[:, None] * np.exp(1j * phi[None, :])
    integrand = z**alpha / (2.0 * z * np.conj(z)) * d_beta_log[:, None] * (r**2)[:, None]
    return complex(np.sum(integrand * wu[:, None]) * wphi)


# ---------------------------------------------------------------------------
# block matrices


def _gauss_jordan(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched determinant and inverse with partial pivoting, in long double."""
    A = np.array(A, dtype=np.longdouble)
    E, N, _ = A.shape
    M = np.concatenate([A, np.broadcast_to(np.eye(N, dtype=np.longdouble), (E, N, N))], axis=2)
    det = np.ones(E, dtype=np.longdouble)
    rows = np.arange(E)
    for col in range(N):
        piv = col + np.argmax(np.abs(M[:, col:, col]), axis=1)
        swap = piv != col
        if np.any(swap):
            tmp = M[rows[swap], col].copy()
            M[rows[swap], col] = M[rows[swap], piv[swap]]
            M[rows[swap], piv[swap]] = tmp
            det[swap] = -det[swap]
        p = M[:, col, col]
        if np.any(p == 0):
            raise SolverError("singular matrix in elimination")
        det *= p
        M[:, col] /= p[:, None]
        factor = M[:, :, col].copy()
        factor[:, col] = 0
        M -= factor[:, :, None] * M[:, col][:, None, :]
    return det, M[:, :, N:]


@dataclass(frozen=True, eq=False)
class BlockMatrix:
    """Symmetric matrix with huge diagonal entries ``lam`` leading a bounded block ``B``.

    ``matrix`` is the full ``(n+m) x (n+m)`` array; the first ``n`` diagonal
    entries are the ``lam``; the trailing ``m x m`` block is ``B``.
    """

    matrix: np.ndarray
    n: int

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or not 1 <= self.n <= A.shape[0]:
            raise InputError("block matrix must be square with 1 <= n <= size")
        if not np.allclose(A, A.T, rtol=0, atol=0):
            raise InputError("block matrix must be symmetric")
        if np.any(np.diag(A)[: self.n] <= 0):
            raise InputError("lambda entries must be positive")
        object.__setattr__(self, "matrix", A)

    @classmethod
    def assemble(cls, lam, coupling, B) -> "BlockMatrix":
        """``coupling`` is ``(n+m) x n``; its upper ``n x n`` diagonal is ignored."""
        lam = np.asarray(lam, dtype=float)
        B = np.atleast_2d(np.asarray(B, dtype=float)) if np.size(B) else np.zeros((0, 0))
        n, m = lam.size, B.shape[0]
        C = np.asarray(coupling, dtype=float).reshape(n + m, n)
        A = np.zeros((n + m, n + m))
        A[:, :n] = C
        A[:n, :] = C.T
        A[np.arange(n), np.arange(n)] = lam
        A[n:, n:] = B
        return cls(A, n)

    @property
    def m(self) -> int:
        return self.matrix.shape[0] - self.n

    @property
    def lam(self) -> np.ndarray:
        return np.diag(self.matrix)[: self.n]

    @property
    def B(self) -> np.ndarray:
        return self.matrix[self.n :, self.n :]

    @property
    def rho(self) -> float:
        return float(np.sum(1.0 / self.lam))


def random_block_matrix(rng: np.random.Generator, n: int, m: int, lam_range=(1e2, 1e6),
                        entry_bound: float = 1.0, b_eigs=(0.5, 1.0)) -> BlockMatrix:
    """Random instance: log-uniform ``lam``, uniform couplings, ``B`` with spectrum in ``+-b_eigs``."""
    lam = np.exp(rng.uniform(np.log(lam_range[0]), np.log(lam_range[1]), size=n))
    C = rng.uniform(-entry_bound, entry_bound, size=(n + m, n))
    C[:n, :n] = np.triu(C[:n, :n], 1) + np.triu(C[:n, :n], 1).T
    if m:
        Q, _ = np.linalg.qr(rng.normal(size=(m, m)))
        ev = rng.uniform(*b_eigs, size=m) * rng.choice([-1.0, 1.0], size=m)
        B = (Q * ev) @ Q.T
        B = 0.5 * (B + B.T)
    else:
        B = np.zeros((0, 0))
    return BlockMatrix.assemble(lam, C, B)


def _normalized(A: np.ndarray, n: int) -> dict:
    """Per-instance normalized bound quantities for stacks ``A`` of shape (E, N, N)."""
    E, N, _ = A.shape
    m = N - n
    lam = np.diagonal(A, axis1=1, axis2=2)[:, :n].astype(np.longdouble)
    rho = np.sum(1.0 / lam, axis=1)
    det, inv = _gauss_jordan(A)
    if m:
        detB, invB = _gauss_jordan(A[:, n:, n:])
    else:
        detB, invB = np.ones(E, dtype=np.longdouble), np.zeros((E, 0, 0), dtype=np.longdouble)
    if np.any(detB == 0):
        raise SolverError("singular B block")
    ratio = det / (detB * np.prod(lam, axis=1))
    out = {"ratio": ratio.astype(float), "rho": rho.astype(float)}
    out["det"] = (np.abs(ratio - 1) / rho).astype(float)
    diag = np.diagonal(inv, axis1=1, axis2=2)[:, :n]
    out["diagonal"] = (np.max(np.abs(diag * lam - 1), axis=1) / rho).astype(float)
    if n > 1:
        LL = lam[:, :, None] * lam[:, None, :]
        off = np.abs(inv[:, :n, :n]) * LL
        off[:, np.arange(n), np.arange(n)] = 0
        out["lambda_lambda"] = np.max(off.reshape(E, -1), axis=1).astype(float)
    else:
        out["lambda_lambda"] = np.zeros(E)
    if m:
        out["mixed"] = np.max((np.abs(inv[:, :n, n:]) * lam[:, :, None]).reshape(E, -1), axis=1).astype(float)
        scale = np.max(np.abs(invB).reshape(E, -1), axis=1)
        out["b_block"] = (np.max(np.abs(inv[:, n:, n:] - invB).reshape(E, -1), axis=1) / (rho * scale)).astype(float)
    else:
        out["mixed"] = np.zeros(E)
        out["b_block"] = np.zeros(E)
    out["inverse"] = inv
    return out


def block_det_asymptotics(A: BlockMatrix) -> float:
    """``det A / (det B prod lam)`` evaluated by long-double elimination."""
    return float(_normalized(A.matrix[None], A.n)["ratio"][0])


class InverseReport(NamedTuple):
    inverse: np.ndarray
    normalized: dict  # bound class -> normalized size, compare against a constant
    rho: float


def block_inverse_check(A: BlockMatrix) -> InverseReport:
    """Entries of ``A^-1`` scaled by their predicted sizes.

    ``diagonal``: ``max |alpha_kk lam_k - 1| / rho``; ``lambda_lambda``:
    ``max |alpha_jl| lam_j lam_l``; ``mixed``: ``max |alpha_jl| lam_j``;
    ``b_block``: ``max |alpha_B - B^-1| / (rho max |B^-1|)``.
    """
    out = _normalized(A.matrix[None], A.n)
    vals = {k: float(out[k][0]) for k in BOUND_CLASSES}
    return InverseReport(np.asarray(out["inverse"][0], dtype=float), vals, A.rho)


def block_ensemble(seed: int, count: int, max_m: int = 5, max_n: int = 5, lam_range=(1e2, 1e6)) -> dict:
    """Normalized bound quantities over ``count`` random instances.

    Sizes are drawn uniformly with ``0 <= m <= max_m`` and
    ``1 <= n <= max_n``; returns class -> array of length ``count``.
    """
    rng = np.random.default_rng(seed)
    ms = rng.integers(0, max_m + 1, size=count)
    ns = rng.integers(1, max_n + 1, size=count)
    stats = {k: np.empty(count) for k in (*BOUND_CLASSES, "ratio", "rho")}
    for n in range(1, max_n + 1):
        for m in range(0, max_m + 1):
            idx = np.flatnonzero((ns == n) & (ms == m))
            if idx.size == 0:
                continue
            stack = np.stack([random_block_matrix(rng, n, m, lam_range).matrix for _ in idx])
            out = _normalized(stack, n)
            for k in stats:
                stats[k][idx] = out[k]
    return stats


class EnsembleCheck(NamedTuple):
    constants: dict  # fitted constants, 2x the calibration maximum
    maxima: dict  # maxima on the test ensemble
    violations: dict
    count: int


def block_bounds_check(calibration_seed: int = 1, test_seed: int = 2, count: int = 10_000,
                       calibration_count: int | None = None, margin: float = 2.0) -> EnsembleCheck:
    """Fit constants on one ensemble and count violations on a disjoint one."""
    if calibration_seed == test_seed:
        raise InputError("calibration and test ensembles must use different seeds")
    cal = block_ensemble(calibration_seed, calibration_count or count)
    test = block_ensemble(test_seed, count)
    C = {k: margin * float(np.max(cal[k])) for k in BOUND_CLASSES}
    maxima = {k: float(np.max(test[k])) for k in BOUND_CLASSES}
    viol = {k: int(np.sum(test[k] > C[k])) for k in BOUND_CLASSES}
    return EnsembleCheck(C, maxima, viol, count)


# ---------------------------------------------------------------------------
# entry model and normal form


def wp_entry_model(t: complex) -> float:
    """``pi^3 / (|t|^2 (-log|t|)^3)``."""
    a = abs(complex(t))
    if not 0.0 < a < 1.0:
        raise InputError("need 0 < |t| < 1")
    return float(PI3 / (a * a * (-np.log(a)) ** 3))


def r_from_t(t) -> np.ndarray:
    return (-np.log(np.abs(np.asarray(t, dtype=complex)))) ** -0.5


def rho_metric(ts) -> float:
    """``sum_k (log|t_k|)^-2``."""
    return float(np.sum(np.log(np.abs(np.asarray(ts, dtype=complex))) ** -2.0))


def rho_from_r(rs) -> float:
    return float(np.sum(np.asarray(rs, dtype=float) ** 4))


class NormalForm(NamedTuple):
    t_chart: float
    r_chart: float
    residual: float  # relative


def normal_form_check(t: complex, dt: complex) -> NormalForm:
    """Entry model on ``dt`` against ``pi^3 (4 dr^2 + r^6 dtheta^2)`` on the pushed tangent.

    ``r = (-log|t|)^(-1/2)``, ``theta = arg t``: ``dr = r^3 Re(dt/t) / 2`` and
    ``dtheta = Im(dt/t)``.
    """
    t, dt = complex(t), complex(dt)
    lhs = wp_entry_model(t) * abs(dt) ** 2
    r = float(r_from_t(t))
    w = dt / t
    dr = 0.5 * r**3 * w.real
    dth = w.imag
    rhs = PI3 * (4.0 * dr * dr + r**6 * dth * dth)
    scale = max(abs(lhs), abs(rhs))
    return NormalForm(lhs, rhs, abs(lhs - rhs) / scale if scale else 0.0)
