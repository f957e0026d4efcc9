import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from postprice.numerics import (IntegrationError, OdeError, RootFindingError, Tolerance,
                                find_root, integrate, integrate_ode)


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(abs_tol=0.0)
    with pytest.raises(ValueError):
        Tolerance(max_iter=0)


def test_integrate_exponential_density():
    # linear discount, lam = T = 1: integral of (1 - t) e^{-t} is e^{-1}
    val = integrate(lambda t: (1 - t) * math.exp(-t), 0.0, 1.0)
    assert abs(val - math.exp(-1)) < 1e-12


def test_integrate_empty_interval_and_order():
    assert integrate(math.sin, 2.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        integrate(math.sin, 1.0, 0.0)


def test_integrate_breakpoint_kink():
    f = lambda t: abs(t - 0.3)
    assert abs(integrate(f, 0.0, 1.0, points=[0.3]) - (0.3 ** 2 + 0.7 ** 2) / 2) < 1e-12


def test_integrate_reports_failure():
    tol = Tolerance(abs_tol=1e-14, rel_tol=1e-14, max_iter=3)
    with pytest.raises(IntegrationError) as info:
        integrate(lambda t: math.sin(1.0 / t) if t else 0.0, 0.0, 1.0, tol)
    assert math.isfinite(info.value.estimate)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=5), st.floats(-3, 0), st.floats(0.1, 3))
def test_integrate_polynomials(coefs, a, width):
    b = a + width
    poly = np.polynomial.Polynomial(coefs)
    anti = poly.integ()
    exact = anti(b) - anti(a)
    assert abs(integrate(poly, a, b) - exact) <= 1e-9 * max(1.0, abs(exact))


def test_find_root_brackets():
    assert abs(find_root(lambda x: x * x - 2, 0.0, 2.0) - math.sqrt(2)) < 1e-12
    with pytest.raises(RootFindingError) as info:
        find_root(lambda x: x * x + 1, -1.0, 1.0)
    assert info.value.f_lo == 2.0 and info.value.f_hi == 2.0


@given(st.floats(-10, 10), st.floats(0.5, 5))
def test_find_root_linear(r, slope):
    x = find_root(lambda t: slope * (t - r), r - 7.0, r + 3.0)
    assert abs(x - r) <= 1e-10 * max(1.0, abs(r))


def test_ode_exponential_forward_and_backward():
    ts, ys = integrate_ode(lambda t, y: y, 0.0, 1.0, 1.0, steps=200)
    assert ts[0] == 0.0 and ts[-1] == 1.0
    assert abs(ys[-1] - math.e) < 1e-9
    ts, ys = integrate_ode(lambda t, y: -2 * y, 1.0, 0.0, 1.0, steps=400)
    assert np.all(np.diff(ts) > 0)
    assert abs(ys[0] - math.exp(2.0)) < 1e-9 and ys[-1] == 1.0


def test_ode_fourth_order():
    errs = []
    for n in (20, 40):
        _, ys = integrate_ode(lambda t, y: math.cos(t) * y, 0.0, 2.0, 1.0, steps=n)
        errs.append(abs(ys[-1] - math.exp(math.sin(2.0))))
    assert 10 < errs[0] / errs[1] < 24


def test_ode_blowup_raises():
    with pytest.raises(OdeError):
        integrate_ode(lambda t, y: y * y, 0.0, 2.0, 1.0, steps=50)
