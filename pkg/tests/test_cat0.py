import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from cusplab import cat0
from cusplab import geodesics as geo
from cusplab.errors import InputError
from cusplab.metrics import CuspidalPlane, EuclideanBlock, ProductCuspidal, SpherePatch


def test_comparison_triangle_examples():
    tri = cat0.comparison_triangle(3, 4, 5)
    A, B, C = tri.points
    # the 5-side is CA, so the right angle sits at B
    assert np.dot(A - B, C - B) == pytest.approx(0.0, abs=1e-12)
    flat = cat0.comparison_triangle(1, 2, 3)
    assert flat.points[2, 1] == 0.0
    with pytest.raises(InputError):
        cat0.comparison_triangle(1, 1, 3)


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.0, 1.0))
def test_comparison_triangle_reproduces_sides(a, b, u):
    c = abs(a - b) + u * (a + b - abs(a - b))
    A, B, C = cat0.comparison_triangle(a, b, c).points
    assert np.linalg.norm(B - A) == pytest.approx(a, rel=1e-12)
    assert np.linalg.norm(C - B) == pytest.approx(b, rel=1e-9, abs=1e-9)
    assert np.linalg.norm(A - C) == pytest.approx(c, rel=1e-9, abs=1e-9)


def test_euclidean_slack_zero():
    e = EuclideanBlock(1)
    res = cat0.cat0_check(e, cat0.geodesic_triangle(e, [0, 0], [2, 0.5], [0.3, 1.7]))
    assert abs(res.min_slack) <= 1e-8 and np.nanmax(np.abs(res.slack)) <= 1e-8 and res.skipped == 0


def test_cuspidal_slack_nonnegative():
    m = CuspidalPlane(1.0)
    res = cat0.cat0_check(m, cat0.geodesic_triangle(m, [0.6, 0.0], [1.4, 2.0], [1.0, -3.0]), grid=7)
    assert res.min_slack >= -1e-6
    assert np.nanmax(res.slack) > 1e-3


def test_product_slack_nonnegative():
    m = ProductCuspidal(1, 1, 1.0)
    res = cat0.cat0_check(m, cat0.geodesic_triangle(m, [0, 0, 0.6, 0], [1, 0, 1.2, 2], [0, 1, 0.9, -2]), grid=5)
    assert res.min_slack >= -1e-6


def test_sphere_control_violates():
    s = SpherePatch(1.0)
    res = cat0.cat0_check(s, cat0.geodesic_triangle(s, [np.pi / 2, 0.0], [np.pi / 2, 1.5], [0.3, 0.7]), grid=7)
    assert res.min_slack < -1e-3


def test_comparison_angle():
    assert cat0.comparison_angle(3, 4, 5) == pytest.approx(np.pi / 2)
    with pytest.raises(InputError):
        cat0.comparison_angle(0, 1, 1)


def test_alexandrov_euclidean():
    e = EuclideanBlock(1)
    right = cat0.alexandrov_angle(e, geo.connect(e, [0, 0], [1, 0]), geo.connect(e, [0, 0], [0, 2]))
    assert right.angle == pytest.approx(np.pi / 2, abs=1e-12)
    same = cat0.alexandrov_angle(e, geo.connect(e, [0, 0], [1, 1]), geo.connect(e, [0, 0], [2, 2]))
    assert same.angle == pytest.approx(0.0, abs=1e-7)
    with pytest.raises(InputError):
        cat0.alexandrov_angle(e, geo.connect(e, [0, 0], [1, 0]), geo.connect(e, [1, 1], [0, 2]))


def test_alexandrov_cusp_matches_riemannian_angle():
    m = CuspidalPlane(1.0)
    s1, s2 = geo.connect(m, [1.0, 0.0], [0.6, 2.0]), geo.connect(m, [1.0, 0.0], [1.3, -1.5])
    res = cat0.alexandrov_angle(m, s1, s2)
    # Riemannian angle between the initial velocities
    f = np.array([0.0, 1e-6])
    v1 = (s1.at(f)[1] - s1.at(f)[0]) / 1e-6
    v2 = (s2.at(f)[1] - s2.at(f)[0]) / 1e-6
    g = m.diag(np.array([1.0, 0.0]))
    cosine = np.sum(g * v1 * v2) / np.sqrt(np.sum(g * v1 * v1) * np.sum(g * v2 * v2))
    assert res.angle == pytest.approx(np.arccos(cosine), abs=1e-5)
    assert res.monotone


def test_convexity():
    e = EuclideanBlock(1)
    par = cat0.convexity_check(e, geo.connect(e, [0, 0], [1, 0]), geo.connect(e, [0, 1], [1, 1]))
    assert np.max(np.abs(par.second_differences)) < 1e-12
    m = CuspidalPlane(1.0)
    res = cat0.convexity_check(m, geo.connect(m, [1.0, 0.0], [1.0, 3.0]), geo.connect(m, [0.7, -1.0], [1.4, 2.0]))
    assert res.min_second_difference > 0
    s = SpherePatch(1.0)
    neg = cat0.convexity_check(s, geo.connect(s, [0.3, 0.0], [np.pi - 0.3, 0.2]), geo.connect(s, [0.3, np.pi], [np.pi - 0.3, np.pi + 0.2]))
    assert neg.min_second_difference < 0


def test_flat_triangles():
    e = EuclideanBlock(2)
    v = cat0.flat_triangle_check(e, cat0.geodesic_triangle(e, [0, 0, 0, 0], [1, 0, 0, 0], [0.3, 2, 0, 0]))
    assert v.flat and v.deviation < 1e-10
    span = cat0.flat_triangle_check(e, cat0.geodesic_triangle(e, [0, 0, 0, 0], [1, 0, 0, 1], [0, 2, 1, 0]))
    assert span.flat
    m = CuspidalPlane(1.0)
    bent = cat0.flat_triangle_check(m, cat0.geodesic_triangle(m, [1.0, 0.0], [0.6, 2.0], [1.4, -3.0]))
    assert not bent.flat and bent.deviation > 0


def test_thinness_threshold():
    res = cat0.thinness_probe(EuclideanBlock(1), delta=1.0)
    assert res.insize_unit == pytest.approx(1 / (2 * np.sqrt(3)), rel=1e-14)
    assert res.threshold == pytest.approx(2 * np.sqrt(3), abs=1e-8)
    # insize grows linearly, so no delta bounds every triangle
    assert np.allclose(res.insize_scaled / res.scales, res.insize_unit, rtol=1e-12)
    with pytest.raises(InputError):
        cat0.thinness_probe(CuspidalPlane(1.0))


@given(st.floats(0.1, 20))
def test_thinness_threshold_scales_with_delta(delta):
    assert cat0.thinness_probe(EuclideanBlock(1), delta=delta, scales=(1.0,), slim_samples=2).threshold == pytest.approx(
        2 * np.sqrt(3) * delta, rel=1e-12
    )


@pytest.mark.parametrize("g, n, nu", [(2, 0, 2), (1, 1, 1), (0, 6, 2), (0, 4, 1), (1, 2, 1), (3, 0, 3)])
def test_flat_rank_values(g, n, nu):
    assert cat0.max_flat_rank(g, n) == nu
    assert cat0.max_flat_rank_search(g, n)[0] == nu


def test_flat_rank_all_small():
    for g in range(4):
        for n in range(10):
            if 1 <= 3 * g - 3 + n <= 6:
                assert cat0.max_flat_rank(g, n) == cat0.max_flat_rank_search(g, n)[0], (g, n)


def test_flat_rank_witness_is_consistent():
    k, pieces = cat0.max_flat_rank_search(0, 6)[1]
    assert sum(p[1] for p in pieces) == 6
    assert sum(p[2] for p in pieces) == 2 * k
    assert cat0.flat_count(pieces) == 2


def test_flat_rank_errors():
    with pytest.raises(InputError):
        cat0.max_flat_rank(0, 3)
    with pytest.raises(InputError):
        cat0.max_flat_rank(1.5, 1)


@given(st.floats(0.5, 1.5), st.floats(-3, 3), st.floats(0.5, 1.5), st.floats(-3, 3), st.floats(0.5, 1.5), st.floats(-3, 3))
def test_cusp_comparison_inequality_property(r1, t1, r2, t2, r3, t3):
    pts = np.array([[r1, t1], [r2, t2], [r3, t3]])
    m = CuspidalPlane(1.0)
    tri = cat0.geodesic_triangle(m, *pts)
    L = tri.lengths
    assume(min(L) > 1e-3 and 2 * L.max() < L.sum() - 1e-6)
    assert cat0.cat0_check(m, tri, grid=3).min_slack >= -1e-6
