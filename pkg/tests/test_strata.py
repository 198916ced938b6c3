import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import quad
from hypothesis import strategies as st

from cusplab import geodesics as geo
from cusplab import strata
from cusplab.errors import InputError, SingularPointError
from cusplab.metrics import ChartPoint, CuspidalPlane, PerturbedProduct, ProductCuspidal
from cusplab.strata import StratumLabel

PI3 = np.pi**3


def test_labels():
    assert strata.label(ChartPoint(r=[0.0, 0.3], theta=[0, 0])) == {1}
    assert strata.label(ChartPoint(r=[0.1, 0.3], theta=[0, 0])) == set()
    assert strata.label(ChartPoint(r=[0.0, 0.0], theta=[0, 0])) == {1, 2}
    assert StratumLabel({1}).precedes(StratumLabel({1, 2}))
    assert not StratumLabel({1, 2}).precedes(StratumLabel({2}))


@given(st.floats(0.04, 0.7))
def test_length_proxy_relations(r):
    lp = strata.LengthProxy.from_r(r)
    assert lp.r == pytest.approx(r, rel=1e-12)
    assert lp.ell == pytest.approx(2 * np.pi**2 * r**2, rel=1e-12)
    assert lp.varrho == pytest.approx(2 * np.pi**1.5 * r, rel=1e-12)
    assert lp.lam == pytest.approx(strata.lambda_value(r), rel=1e-12)


def test_length_proxy_monotone():
    ts = np.exp(-np.array([2.0, 4.0, 8.0, 16.0]))
    vals = np.array([[p.ell, p.r, p.varrho] for p in map(strata.LengthProxy, ts)])
    assert np.all(np.diff(vals, axis=0) < 0)
    with pytest.raises(InputError):
        strata.LengthProxy(0.0)


def test_label_trace_radial():
    model = CuspidalPlane(1.0)
    c = geo.Curve(model, np.linspace(0, 1, 11), np.column_stack([np.linspace(1, 0, 11), np.zeros(11)]))
    tr = strata.label_trace(c)
    assert [run[2] for run in tr.runs] == [set(), {1}]
    assert tr.runs[-1][0] == 1.0 and not tr.refracting


def test_label_trace_refracting():
    model = ProductCuspidal(1, 1, 1.0)
    f = np.linspace(0, 1, 9)[:, None]
    a, o, b = np.array([0, 0, 0.25, 0.3]), np.array([1.0, 0, 0, 0]), np.array([2, 0, 0.25, 0.3])
    pts = np.concatenate([a + f * (o - a), o + f[1:] * (b - o)])
    c = geo.Curve(model, np.linspace(0, 1, 17), pts)
    tr = strata.label_trace(c)
    assert [run[2] for run in tr.runs] == [set(), {1}, set()]
    assert tr.refracting and tr.expected_interior == set()


def test_connect_output_has_one_interior_run():
    model = ProductCuspidal(1, 1, 1.0)
    g = geo.connect(model, [0, 0, 0.5, 0.0], [1, 0.5, 0.7, 2.0])
    tr = strata.label_trace(g)
    assert len(tr.runs) == 1 and tr.runs[0][2] == set()


def test_stratum_distance():
    model = ProductCuspidal(0, 1, PI3)
    assert strata.stratum_distance(model, [0.1, 0.4], [1]) == pytest.approx(2 * np.pi**1.5 * 0.1, rel=1e-14)
    assert strata.stratum_distance(model, [0.0, 0.4], [1]) == 0.0


@given(st.lists(st.floats(0.05, 0.6), min_size=2, max_size=2))
def test_pure_product_distance_formula(rs):
    model = ProductCuspidal(1, 2, PI3)
    q = np.r_[0.2, -0.1, rs, 0.5, 1.0]
    ells = [strata.LengthProxy.from_r(r).ell for r in rs]
    assert strata.stratum_distance(model, q, [1, 2]) == pytest.approx(np.sqrt(2 * np.pi * sum(ells)), rel=1e-13)


def test_grad_lambda():
    model = ProductCuspidal(1, 1, PI3)
    q = np.array([0.0, 0.0, 0.2, 0.0])
    g = strata.grad_lambda(model, q, 1)
    # unit gradient in a pure product: |grad lambda| = 1
    assert strata.inner(model, q, g, g) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(SingularPointError):
        strata.grad_lambda(model, [0.0, 0.0, 0.0, 0.0], 1)
    with pytest.raises(InputError):
        strata.grad_lambda(model, q, 2)


def test_integral_curve_probe_pure():
    model = ProductCuspidal(0, 2, PI3)
    one = strata.integral_curve_probe(model, [0.3 / strata.TWO_PI_32, 0.5, 0.0, 0.0], [0.3, 0.0])
    assert one.length == pytest.approx(0.3, rel=1e-10) and one.endpoint_distance == 0.0
    two = strata.integral_curve_probe(model, [0.3 / strata.TWO_PI_32, 0.4 / strata.TWO_PI_32, 0, 0], [0.3, 0.4])
    assert two.length == pytest.approx(0.5, rel=1e-10)
    with pytest.raises(InputError):
        strata.integral_curve_probe(model, [0.1, 0.1, 0, 0], [0.3, 0.0])


def test_refraction_flagship():
    model = ProductCuspidal(1, 1, 1.0)
    res = strata.refraction_experiment(model, [0, 0, 0.25, 0.3], [2, 0, 0, 0], [1, 0, 0, 0])
    assert res.through == pytest.approx(np.sqrt(1.25) + 1, abs=1e-12)
    assert res.shortcut == pytest.approx(np.sqrt(4.25), abs=1e-12)
    assert res.strict


def test_refraction_second_example():
    model = ProductCuspidal(1, 1, 1.0)
    res = strata.refraction_experiment(model, [1, 0, 0.25, 0.0], [0, 1, 0, 0], [0, 0, 0, 0])
    assert res.through == pytest.approx(np.sqrt(1.25) + 1, abs=1e-12)
    assert res.shortcut == pytest.approx(1.5, abs=1e-12)


def test_refraction_degenerate():
    model = ProductCuspidal(1, 1, 1.0)
    with pytest.raises(InputError):
        strata.refraction_experiment(model, [0, 0, 0.25, 0], [0, 0, 0, 0], [0, 0, 0, 0])


@given(st.floats(0.01, 0.25), st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_refraction_always_shortcut(r, ox, oy, bx):
    model = ProductCuspidal(1, 1, 1.0)
    a, o, b = np.r_[0.0, 0.0, r, 0.0], np.r_[ox, oy, 0, 0], np.r_[bx, 1.0, 0, 0]
    res = strata.refraction_experiment(model, a, b, o)
    assert res.gap > 0
    v = 2 * r
    assert res.gap == pytest.approx(np.hypot(np.hypot(ox, oy), v) + np.hypot(bx - ox, 1 - oy) - np.hypot(np.hypot(bx, 1), v), abs=1e-12)


def test_corner_345():
    # varrho = 2 sqrt(s) r; with s = 1, r = 1.5 and 2 give 3 and 4
    model = ProductCuspidal(0, 2, 1.0)
    res = strata.corner_experiment(model, [1.5, 0, 0.2, 0], [0, 2.0, 0, 0.4])
    assert res.through == pytest.approx(7.0, rel=1e-14)
    assert res.direct == pytest.approx(5.0, rel=1e-14)


def test_corner_gap_vanishes():
    model = ProductCuspidal(0, 2, PI3)
    v1 = strata.TWO_PI_32 * 0.1
    for r in (1e-2, 1e-4, 1e-6, 1e-8):
        v2 = strata.TWO_PI_32 * r
        gap = strata.corner_experiment(model, [0.1, 0, 0, 0], [0, r, 0, 0]).gap
        assert gap == pytest.approx(v1 + v2 - np.hypot(v1, v2), abs=1e-13)
    assert gap < 1e-6


def test_scaling_probe_exact_flag():
    model = PerturbedProduct(ProductCuspidal(1, 1, PI3), 0.0)
    res = strata.perturbation_scaling_probe(model, np.geomspace(0.03, 0.3, 4))
    assert res.exact


def test_scaling_probe_leading_coefficient():
    eps, x, th = 0.1, 0.3, 0.7
    model = PerturbedProduct(ProductCuspidal(1, 1, PI3), eps)
    grid = np.geomspace(0.03, 0.3, 6)
    res = strata.perturbation_scaling_probe(model, grid)
    assert res.distance_slope == pytest.approx(4.0, abs=0.5)
    assert res.ratio_slope >= 2.7
    # the radial path is a competitor, so its exact excess length bounds the deviation above;
    # turning theta near the cusp costs little, so the profile factor can drop to its
    # minimum over theta but no lower
    K = 1 + np.cos(th) / 2 + np.sin(x) / 2
    K_min = 0.5 + np.sin(x) / 2
    for r, dev in zip(grid, res.distance_deviation):
        radial = quad(lambda u: 2 * np.pi**1.5 * (np.sqrt(1 + eps * K * u**3) - 1), 0, r, epsabs=0, epsrel=1e-13)[0]
        assert dev <= radial * (1 + 1e-6)
        assert dev >= radial * K_min / K * (1 - 1e-2)


def test_scaling_probe_grid_checks():
    model = PerturbedProduct(ProductCuspidal(1, 1, PI3), 0.1)
    with pytest.raises(InputError):
        strata.perturbation_scaling_probe(model, [0.1, 0.2, 0.3])
    with pytest.raises(InputError):
        strata.perturbation_scaling_probe(ProductCuspidal(1, 1, PI3), [0.01, 0.1, 1.0])


def test_loglog_slope():
    x = np.array([1.0, 2.0, 4.0])
    assert strata.loglog_slope(x, 3 * x**2.5) == pytest.approx(2.5)
