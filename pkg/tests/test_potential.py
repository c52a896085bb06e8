import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturm_green import (
    AdmissibilityError,
    ArgumentOrderError,
    Forcing,
    InvalidWindowError,
    Potential,
    load_potential,
)
from sturm_green.potential import Polynomial, Sinusoid

from conftest import whole_line

PIECEWISE = {
    "segments": [
        {"from": "-inf", "to": -1, "shape": "constant", "params": {"value": 3}},
        {"from": -1, "to": 2, "shape": "polynomial", "params": {"coefficients": [1, 0, 1]}},
        {"from": 2, "to": "+inf", "shape": "sinusoid",
         "params": {"offset": 4, "amplitude": 2, "frequency": 3, "phase": 0.5}},
    ]
}


def test_integral_closed_forms():
    q = Potential.polynomial([1, 0, 1])
    assert q.integrate(-1, 1) == pytest.approx(8 / 3, rel=1e-14)
    assert q.window_mass(10.0, 1.0) == pytest.approx(2 + 2 * 100 + 2 / 3, rel=1e-14)
    s = Potential.sinusoid(2, 1)
    assert s(math.pi / 2) == pytest.approx(3.0)
    assert s.window_mass(0.0, math.pi) == pytest.approx(4 * math.pi, rel=1e-14)


def test_piecewise_matches_segment_antiderivatives():
    q = Potential.from_spec(PIECEWISE)
    poly = Polynomial([1, 0, 1])
    sin = Sinusoid(4, 2, 3, 0.5)
    expected = (
        3 * 2.0
        + poly.antiderivative(2.0) - poly.antiderivative(-1.0)
        + sin.antiderivative(5.0) - sin.antiderivative(2.0)
    )
    assert q.integrate(-3.0, 5.0) == pytest.approx(expected, rel=1e-13)
    assert q.breakpoints.tolist() == [-1.0, 2.0]
    assert q(2.0) == pytest.approx(4 + 2 * math.sin(6.5))
    assert q.eval_left(2.0) == pytest.approx(5.0)


@settings(max_examples=60, deadline=None)
@given(
    a=st.floats(-30, 30),
    b=st.floats(-30, 30),
    c=st.floats(-30, 30),
)
def test_integral_is_additive(a, b, c):
    q = Potential.from_spec(PIECEWISE)
    a, b, c = sorted((a, b, c))
    whole = q.integrate(a, c)
    assert whole == pytest.approx(q.integrate(a, b) + q.integrate(b, c), rel=1e-11, abs=1e-11)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-50, 50), a=st.floats(0.01, 5))
def test_first_moment_against_quadrature(x, a):
    from scipy.integrate import quad

    q = Potential.from_spec(PIECEWISE)
    lo, hi = x - a, x + a
    ref, _ = quad(lambda t: (t - lo) * q(t), lo, hi, points=[-1, 2], limit=200)
    assert q.first_moment(lo, hi, lo) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_far_polynomial_integral_is_accurate():
    q = Potential.polynomial([1, 0, 1])
    x, a = 1.0e4, 1e-3
    # exact rational value at the rounded endpoints actually used
    lo, hi = Fraction(x - a), Fraction(x + a)
    exact = float((hi - lo) + (hi**3 - lo**3) / 3)
    assert q.window_mass(x, a) == pytest.approx(exact, rel=1e-12)


def test_errors():
    q = Potential.constant(1.0)
    with pytest.raises(ArgumentOrderError):
        q.integrate(1.0, 0.0)
    with pytest.raises(InvalidWindowError):
        q.window_mass(0.0, 0.0)
    with pytest.raises(AdmissibilityError):
        Potential.constant(0.5)
    with pytest.raises(AdmissibilityError):
        Potential.sinusoid(1.5, 1.0)
    with pytest.raises(AdmissibilityError):
        Potential.polynomial([2, -1, 0.1])  # dips below 1 near x = 5
    with pytest.raises(AdmissibilityError):
        Potential.polynomial([1, 1])  # unbounded below


def test_json_round_trip(write_json):
    path = write_json("q.json", PIECEWISE)
    q = load_potential(path)
    q2 = Potential.from_spec(q.to_spec())
    xs = np.linspace(-5, 5, 101)
    np.testing.assert_array_equal(q(xs), q2(xs))
    assert load_potential(write_json("c.json", whole_line("constant", value=4)))(0.0) == 4.0


def test_domain_hint():
    assert Potential.polynomial([1, 0, 1]).domain_hint == pytest.approx(22.33, abs=0.01)
    assert Potential.constant(1.0).domain_hint == 50.0


def test_forcing_indicator_and_gaps():
    f = Forcing.indicator(-1.0, 1.0, 2.0)
    assert f(0.0) == 2.0 and f(1.5) == 0.0 and f(-1.5) == 0.0
    assert f.integrate(-5, 5) == pytest.approx(4.0)
    assert f.sup_norm(-10, 10) == 2.0
    g = Forcing.from_spec({"segments": [{"from": 0, "to": 1, "shape": "constant", "params": {"value": -1}}]})
    assert g(-3.0) == 0.0 and g(0.5) == -1.0
