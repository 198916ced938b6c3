import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusplab import geodesics as geo
from cusplab.errors import InputError
from cusplab.metrics import CuspidalPlane, EuclideanBlock, PerturbedProduct, ProductCuspidal, SpherePatch

PI3 = np.pi**3
# dr^2 + r^6 dtheta^2 from (1, 0) to (1, 1): turning radius solved and integrated with mpmath at 30 digits
CLAIRAUT_L = 0.773081954102372
CLAIRAUT_C = 0.486910750751909


def polyline(model, pts):
    pts = np.asarray(pts, float)
    return geo.Curve(model, np.linspace(0, 1, len(pts)), pts)


def test_curve_length_examples():
    cusp = CuspidalPlane(1.0)
    radial = polyline(cusp, np.column_stack([np.linspace(1, 0, 9), np.zeros(9)]))
    assert geo.curve_length(cusp, radial) == pytest.approx(2.0, abs=1e-12)
    circle = polyline(cusp, np.column_stack([np.full(65, 0.5), np.linspace(0, 2 * np.pi, 65)]))
    assert geo.curve_length(cusp, circle) == pytest.approx(2 * np.pi * 0.125, rel=1e-12)
    assert geo.curve_length(EuclideanBlock(1), polyline(EuclideanBlock(1), [[0, 0], [3, 4]])) == pytest.approx(5.0)
    with pytest.raises(InputError):
        geo.curve_length(cusp, "not a curve")


def test_partition_check():
    e = EuclideanBlock(1)
    v = polyline(e, [[0, 0], [1, 1], [2, 0]])
    assert geo.partition_length_check(e, v, 1) == pytest.approx(2.0)
    assert geo.partition_length_check(e, v, 2) == pytest.approx(2 * np.sqrt(2))
    cusp = CuspidalPlane(1.0)
    arc = polyline(cusp, np.column_stack([np.full(257, 0.5), np.linspace(0, 2.0, 257)]))
    vals = [geo.partition_length_check(cusp, arc, K) for K in (8, 32)]
    assert vals[0] <= vals[1] <= geo.curve_length(cusp, arc) + 1e-9
    g = geo.connect(cusp, [1.0, 0.0], [0.7, 2.5])
    assert geo.partition_length_check(cusp, g, 5) == pytest.approx(g.length, rel=1e-9)


def test_radial_geodesic_keeps_theta():
    c = geo.integrate_geodesic(CuspidalPlane(1.0), [1.0, 0.3], [-0.2, 0.0], 1.0)
    assert np.all(c.points[:, 1] == 0.3)
    assert c.termination == "time"


def test_geodesic_reaches_stratum():
    c = geo.integrate_geodesic(CuspidalPlane(1.0), [1.0, 0.3], [-1.0, 0.0], 2.0)
    assert c.termination == "stratum"
    assert c.end[0] == pytest.approx(0.0, abs=1e-10)


def test_euclidean_line():
    c = geo.integrate_geodesic(EuclideanBlock(1), [0, 0], [3, 4], 1.0)
    assert np.allclose(c.end, [3, 4], atol=1e-12)
    assert np.allclose(geo.speeds(EuclideanBlock(1), c), 5, atol=1e-10)


@given(st.floats(0.5, 1.5), st.floats(-1, 1), st.floats(-3, 3))
def test_clairaut_conservation(r, vr, vt):
    model = CuspidalPlane(1.0)
    if abs(vt) < 1e-3:
        return
    c = geo.integrate_geodesic(model, [r, 0.0], [vr, vt], 1.0)
    C = geo.clairaut_constants(model, c)[:, 0]
    assert np.max(np.abs(C - C[0])) <= 1e-8 * abs(C[0])


def test_integrate_rejects_bad_input():
    with pytest.raises(InputError):
        geo.integrate_geodesic(CuspidalPlane(1.0), [0.0, 0.0], [1.0, 0.0], 1.0)
    with pytest.raises(InputError):
        geo.integrate_geodesic(CuspidalPlane(1.0), [1.0, 0.0], [0.0, 0.0], 1.0)


def test_connect_examples():
    prod = ProductCuspidal(1, 1, 1.0)
    assert geo.connect(prod, [0, 0, 0.1, 0], [0, 0, 0, 0]).length == pytest.approx(0.2, rel=1e-14)
    scaled = ProductCuspidal(0, 1, PI3)
    assert geo.distance(scaled, [0.1, 0.0], [0.0, 0.0]) == pytest.approx(2 * np.pi**1.5 * 0.1, rel=1e-14)
    assert geo.distance(scaled, [0.1, 0.0], [0.0, 0.0]) == pytest.approx(1.11367, abs=1e-5)
    assert geo.distance(EuclideanBlock(1), [0, 0], [3, 4]) == 5.0
    # unit x-offset with r_a = 0.1 in the product
    assert geo.distance(prod, [0, 0, 0.1, 0], [1, 0, 0, 0]) == pytest.approx(np.hypot(1, 0.2), rel=1e-14)


def test_cusp_plane_matches_clairaut_oracle():
    # rho = 2r, phi = theta/8 turns s(4dr^2 + r^6 dtheta^2) into s(drho^2 + rho^6 dphi^2)
    cusp = CuspidalPlane(1.0)
    g = geo.connect(cusp, [0.5, 0.0], [0.5, 8.0])
    assert g.length == pytest.approx(CLAIRAUT_L, rel=1e-12)
    e = geo.connect(cusp, [0.5, 0.0], [0.5, 8.0], strategy="energy", tol=1e-10)
    assert e.length == pytest.approx(CLAIRAUT_L, rel=1e-8)
    assert geo.clairaut_constants(cusp, geo.integrate_geodesic(cusp, [0.5, 0.0], [0.0, 1.0], 0.1))[0, 0] == pytest.approx(1 / 64)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_strategies_agree(seed):
    rng = np.random.default_rng(seed)
    model = PerturbedProduct(ProductCuspidal(1, 1, 1.0), 0.1)
    p = np.r_[rng.uniform(-1, 1, 2), rng.uniform(0.3, 1.2), rng.uniform(-3, 3)]
    q = np.r_[rng.uniform(-1, 1, 2), rng.uniform(0.3, 1.2), rng.uniform(-3, 3)]
    a = geo.connect(model, p, q, strategy="energy")
    b = geo.connect(model, p, q, strategy="shooting")
    assert a.length == pytest.approx(b.length, rel=1e-6)
    assert np.allclose(a.start, p) and np.allclose(b.end, q, atol=1e-9)


def test_exact_and_numeric_on_pure_product():
    model = ProductCuspidal(1, 1, 1.0)
    p, q = [0.2, -0.3, 0.8, 0.0], [-0.5, 0.4, 1.1, 1.7]
    exact = geo.distance(model, p, q, strategy="exact")
    assert geo.distance(model, p, q, strategy="energy") == pytest.approx(exact, rel=1e-7)
    assert geo.distance(model, p, q, strategy="shooting") == pytest.approx(exact, rel=1e-9)


def test_sphere_great_circle():
    s = SpherePatch(1.0)
    assert geo.distance(s, [np.pi / 2, 0.0], [np.pi / 2, 1.0]) == pytest.approx(1.0, rel=1e-14)
    assert geo.distance(s, [0.5, 0.0], [0.5, np.pi]) == pytest.approx(1.0, rel=1e-14)


@given(
    st.floats(0.3, 1.5), st.floats(-4, 4), st.floats(0.3, 1.5), st.floats(-4, 4)
)
def test_distance_symmetric(r0, t0, r1, t1):
    m = CuspidalPlane(1.0)
    assert geo.distance(m, [r0, t0], [r1, t1]) == pytest.approx(geo.distance(m, [r1, t1], [r0, t0]), rel=1e-10)


@given(st.floats(0.3, 1.5), st.floats(-4, 4), st.floats(0.3, 1.5), st.floats(-4, 4), st.floats(-3, 3))
def test_distance_rotation_invariant(r0, t0, r1, t1, shift):
    m = CuspidalPlane(1.0)
    assert geo.distance(m, [r0, t0], [r1, t1]) == pytest.approx(geo.distance(m, [r0, t0 + shift], [r1, t1 + shift]), rel=1e-10)


def test_uniqueness_from_perturbed_starts():
    model = PerturbedProduct(ProductCuspidal(1, 1, 1.0), 0.1)
    p, q = [0.1, 0.2, 0.9, -1.0], [-0.4, 0.5, 0.6, 1.5]
    ref = geo.energy_connect(model, p, q)
    for s in range(3):
        c = geo.energy_connect(model, p, q, perturbation=0.3, seed=s)
        assert geo.sup_distance(ref, c) <= 1e-4


def test_shooting_result_fields():
    res = geo.shoot(CuspidalPlane(1.0), [1.0, 0.0], [0.8, 1.0])
    assert res.converged and res.miss <= 1e-10
    assert np.allclose(res.curve.end, [0.8, 1.0], atol=1e-9)


def test_second_variation_flat_parallel():
    d2, formula = geo.second_variation_check(EuclideanBlock(1), [0, 0], [1, 0], [0, 1], [0, 1])
    assert abs(d2) < 1e-10 and abs(formula) < 1e-10


def test_second_variation_common_point_positive():
    d2, formula = geo.second_variation_check(CuspidalPlane(1.0), [1.0, 0.0], [0.8, 2.0], [0, 0], [0.2, 1.0])
    assert d2 > 0 and formula > 0
    assert d2 == pytest.approx(formula, rel=1e-3)


def test_curve_reversed_and_repr():
    g = geo.connect(CuspidalPlane(1.0), [1.0, 0.0], [0.6, 1.0])
    rv = g.reversed()
    assert np.allclose(rv.at(0.25), g.at(0.75))
    assert "samples=" in repr(g) and len(repr(g)) < 200
