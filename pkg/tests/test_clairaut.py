import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cusplab import clairaut
from cusplab.errors import InputError


def mp_oracle(r0, r1, dtheta, turning):
    """Turning radius and length for dr^2 + r^6 dtheta^2, all in mpmath."""
    mp.mp.dps = 30
    lo, hi = min(r0, r1), max(r0, r1)

    def parts(rm):
        c = rm**3
        w = lambda a, b: mp.quad(lambda r: c / (r**3 * mp.sqrt(r**6 - c**2)), [a, b])  # noqa: E731
        ell = lambda a, b: mp.quad(lambda r: r**3 / mp.sqrt(r**6 - c**2), [a, b])  # noqa: E731
        if turning:
            return w(lo, hi) + 2 * w(rm, lo), ell(lo, hi) + 2 * ell(rm, lo)
        return w(lo, hi), ell(lo, hi)

    rm = mp.findroot(lambda x: parts(x)[0] - dtheta, mp.mpf(0.8) * lo)
    return float(mp.re(rm)), float(mp.re(parts(rm)[1]))


def test_turning_branch():
    sol = clairaut.solve(1.0, 1.0, 1.0)
    rm, L = mp_oracle(1.0, 1.0, 1.0, True)
    assert sol.turning
    assert sol.rm == pytest.approx(rm, rel=1e-12)
    assert sol.length == pytest.approx(L, rel=1e-12)


def test_monotone_branch():
    sol = clairaut.solve(1.0, 0.5, 0.2)
    rm, L = mp_oracle(1.0, 0.5, 0.2, False)
    assert not sol.turning
    assert sol.rm == pytest.approx(rm, rel=1e-11)
    assert sol.length == pytest.approx(L, rel=1e-12)


def test_radial_and_sign():
    sol = clairaut.solve(1.0, 0.5, 0.0)
    assert sol.c == 0 and sol.length == 0.5
    a, b = clairaut.solve(0.8, 1.1, 2.5), clairaut.solve(0.8, 1.1, -2.5)
    assert a.c == -b.c and a.length == b.length


def test_errors():
    with pytest.raises(InputError):
        clairaut.solve(0.0, 1.0, 1.0)
    with pytest.raises(InputError):
        clairaut.solve(1.0, 1.0, np.inf)


@given(st.floats(0.2, 2.0), st.floats(0.2, 2.0), st.floats(0.01, 30.0))
def test_winding_roundtrip(r0, r1, W):
    sol = clairaut.solve(r0, r1, W)
    w, ell = clairaut.winding(sol.rm, r0, r1, sol.turning)
    assert w == pytest.approx(W, rel=1e-9)
    # never longer than going through the cusp, never shorter than |r1 - r0|
    assert abs(r1 - r0) - 1e-12 <= sol.length < r0 + r1


@given(st.floats(0.3, 1.5), st.floats(0.3, 1.5), st.floats(0.05, 5.0))
def test_trajectory_hits_target(r0, r1, W):
    sol = clairaut.solve(r0, r1, W)
    s, states = clairaut.trajectory(sol, theta0=0.25, samples=33)
    assert s[-1] == pytest.approx(sol.length, rel=1e-12)
    assert np.allclose(states[:2, -1], [r1, 0.25 + W], atol=1e-8)
