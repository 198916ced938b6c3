import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusplab import asymptotics as asy
from cusplab.errors import InputError, SolverError

PI3 = np.pi**3


def collar_mp(k, alpha, c=mp.e**-1):
    """The collar integral in its original variable r, by mpmath."""
    mp.mp.dps = 30
    lt = -mp.mpf(k)
    f = lambda u: (lt * mp.sin(mp.pi * u / lt)) ** 2 * mp.e ** (2 * alpha * u)  # noqa: E731  u = log r
    return 2 / mp.pi * mp.quad(f, [lt - mp.log(c), mp.log(c)])


def collar_closed(k, c=np.exp(-1.0)):
    eps = -np.log(c) / k
    return k**3 / np.pi * (1 - 2 * eps) + k**3 * np.sin(2 * np.pi * eps) / np.pi**2


@pytest.mark.parametrize("k", [5.0, 10.0, 20.0, 40.0])
def test_collar_alpha0(k):
    val = asy.collar_norm_integral(k, 0)
    assert val == pytest.approx(collar_closed(k), rel=1e-13)
    assert val == pytest.approx(float(collar_mp(k, 0)), rel=1e-13)
    assert abs(val - k**3 / np.pi) <= 5


def test_collar_value_at_10():
    # k^3/pi - 4 pi/3 = 314.121 is only the start of an expansion whose next term is 32 pi^3 / (120 k^2)
    val = asy.collar_norm_integral(10.0, 0)
    assert val == pytest.approx(314.2030064368, abs=1e-9)
    assert val - (1000 / np.pi - 4 * np.pi / 3) == pytest.approx(32 * np.pi**3 / 12000, rel=0.02)


@pytest.mark.parametrize("k", [5.0, 10.0, 20.0, 40.0])
def test_collar_alpha1(k):
    val = asy.collar_norm_integral(k, 1)
    assert val == pytest.approx(float(collar_mp(k, 1)), rel=1e-12)
    assert 0 < val <= 5


def test_collar_alpha1_bounded_as_k_grows():
    vals = [asy.collar_norm_integral(k, 1) for k in (40.0, 80.0, 160.0, 320.0)]
    # converges to (2/pi) sum: int_eps^inf sin^2(pi v) e^{-2kv} k^3 dv -> pi e^{-2} (...) bounded
    assert max(vals) - min(vals) < 0.05 and max(vals) < 5


def test_collar_errors():
    with pytest.raises(InputError):
        asy.collar_norm_integral(10.0, 0, c=1.5)
    with pytest.raises(InputError):
        asy.collar_norm_integral(10.0, -1)
    with pytest.raises(InputError):
        asy.collar_norm_integral(1.5, 0)


def test_collar_report():
    rep = asy.collar_report([5.0, 10.0], 0)
    assert rep.reference == [125 / np.pi, 1000 / np.pi]
    assert rep.to_dict()["fitted"]["max_abs_residual"] == pytest.approx(max(abs(x) for x in rep.residual))


@pytest.mark.parametrize("t", [0.1, 0.05, 0.01, 0.03 * np.exp(0.7j)])
def test_pairing_alpha0(t):
    val = asy.plumbing_pairing(t, 0)
    assert abs(val + np.pi / t) <= 1e-6 * np.pi / abs(t)


@pytest.mark.parametrize("alpha", [1, 2, -1])
def test_pairing_other_alpha_vanishes(alpha):
    for t in (0.1, 0.05, 0.01):
        assert abs(asy.plumbing_pairing(t, alpha)) <= 1e-8 / t


def test_pairing_profile_independence():
    cubic = asy.PairingProfile("cubic", lambda v: 3 * v**2 - 2 * v**3, lambda v: 6 * v - 6 * v**2)
    for prof in (asy.smooth_profile(0.1, 0.6), cubic):
        assert asy.plumbing_pairing(0.05, 0, prof) == pytest.approx(asy.plumbing_pairing(0.05, 0), rel=1e-6)


def test_pairing_rejects_unnormalized_profile():
    half = asy.PairingProfile("half", lambda v: 0.5 * v, lambda v: 0.5 + 0 * v)
    with pytest.raises(InputError):
        asy.plumbing_pairing(0.1, 0, half)
    with pytest.raises(InputError):
        asy.plumbing_pairing(1.5, 0)


def test_smooth_profile_shape():
    p = asy.smooth_profile()
    v = np.linspace(0, 1, 101)
    assert np.all(p.psi(v[v <= 0.2]) == 0) and np.all(p.psi(v[v >= 0.8]) == 1)
    h = 1e-6
    mid = np.linspace(0.25, 0.75, 7)
    assert np.allclose(p.dpsi(mid), (p.psi(mid + h) - p.psi(mid - h)) / (2 * h), atol=1e-7)


def test_block_det_closed_forms():
    diag = asy.BlockMatrix.assemble([1e4], [[0.0], [0.0]], [[1.0]])
    assert asy.block_det_asymptotics(diag) == 1.0
    two = asy.BlockMatrix.assemble([1e3, 2e3], [[0, 0.5], [0.5, 0]], [])
    assert asy.block_det_asymptotics(two) == pytest.approx(1 - 0.25 / 2e6, rel=1e-15)


def test_block_inverse_against_numpy():
    rng = np.random.default_rng(5)
    A = asy.random_block_matrix(rng, 3, 2, lam_range=(10, 100))
    rep = asy.block_inverse_check(A)
    assert np.allclose(rep.inverse, np.linalg.inv(A.matrix), rtol=1e-12, atol=1e-15)
    assert rep.rho == pytest.approx(np.sum(1 / A.lam))
    assert set(rep.normalized) == set(asy.BOUND_CLASSES)


def test_gauss_jordan_det():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(4, 5, 5))
    det, inv = asy._gauss_jordan(A)
    assert np.allclose(det.astype(float), np.linalg.det(A), rtol=1e-12)
    assert np.allclose((inv.astype(float) @ A), np.eye(5), atol=1e-12)
    with pytest.raises(SolverError):
        asy._gauss_jordan(np.zeros((1, 2, 2)))


def test_block_matrix_validation():
    with pytest.raises(InputError):
        asy.BlockMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
    with pytest.raises(InputError):
        asy.BlockMatrix(np.array([[-1.0, 0.0], [0.0, 1.0]]), 1)


def test_block_bounds_small_ensemble():
    check = asy.block_bounds_check(calibration_seed=11, test_seed=12, count=400)
    assert sum(check.violations.values()) == 0
    assert all(check.maxima[k] <= check.constants[k] for k in asy.BOUND_CLASSES)
    with pytest.raises(InputError):
        asy.block_bounds_check(calibration_seed=3, test_seed=3, count=10)


def test_block_bounds_scale_with_rho():
    # the normalized det quantity stays bounded while rho shrinks by four decades
    rng = np.random.default_rng(0)
    highs = []
    for lo in (1e2, 1e4, 1e6):
        stats = [asy.block_inverse_check(asy.random_block_matrix(rng, 3, 2, (lo, lo * 10))).normalized["det"] for _ in range(50)]
        highs.append(max(stats))
    assert max(highs) / min(highs) < 10


def test_entry_model():
    assert asy.wp_entry_model(np.exp(-10)) == pytest.approx(PI3 * np.exp(20) / 1000, rel=1e-14)
    vals = [asy.wp_entry_model(x) for x in (0.1, 1e-2, 1e-3, 1e-6)]
    assert np.all(np.diff(vals) > 0)
    with pytest.raises(InputError):
        asy.wp_entry_model(0.0)


@given(st.floats(0.05, 30.0), st.floats(-np.pi, np.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_normal_form(k, arg, a, b):
    if a == 0 and b == 0:
        return
    t = np.exp(-k) * np.exp(1j * arg)
    assert asy.normal_form_check(t, complex(a, b)).residual <= 1e-10


@given(st.lists(st.floats(0.05, 30.0), min_size=1, max_size=5))
def test_rho_identity(ks):
    ts = np.exp(-np.array(ks))
    assert asy.rho_metric(ts) == pytest.approx(asy.rho_from_r(asy.r_from_t(ts)), rel=1e-14)
