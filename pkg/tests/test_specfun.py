import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from sphadi.errors import ConvergenceError, DomainError, PoleError, SingularityError
from sphadi.specfun import (
    T_MAX,
    SeriesParams,
    bessel_j,
    gamma,
    j_lower,
    pjn_coefficients,
    pjn_poly,
    pochhammer,
)


# -- gamma ------------------------------------------------------------------


def test_gamma_examples():
    assert gamma(1) == 1.0
    assert gamma(5) == 24.0
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)


def test_gamma_half_via_reflection():
    # Gamma(x) Gamma(1-x) = pi / sin(pi x) at x = 1/2 gives Gamma(1/2)^2 = pi
    assert gamma(0.5) * gamma(0.5) == pytest.approx(math.pi, rel=1e-14)


def test_gamma_against_math_gamma_on_range():
    xs = np.linspace(-20, 30, 5001)
    xs = xs[np.abs(xs - np.round(xs)) > 1e-3]
    ours = gamma(xs)
    ref = np.array([math.gamma(x) for x in xs])
    assert np.max(np.abs(ours / ref - 1)) < 1e-12


@pytest.mark.parametrize("x", [0, -1, -2, -7])
def test_gamma_poles(x):
    with pytest.raises(PoleError, match=str(x)):
        gamma(x)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 20))
def test_gamma_recurrence(x):
    assert abs(gamma(x + 1) - x * gamma(x)) / abs(gamma(x + 1)) <= 1e-12


# -- pochhammer ---------------------------------------------------------------


def test_pochhammer_examples():
    assert pochhammer(0.37, 0) == 1.0
    assert pochhammer(3, 2) == 12
    assert pochhammer(-2, 3) == 0
    with pytest.raises(ValueError):
        pochhammer(1.0, -1)


def test_pochhammer_gamma_ratio():
    s = 2.3
    for i in range(6):
        assert pochhammer(s, i) == pytest.approx(gamma(s + i) / gamma(s), rel=1e-12)


# -- Bessel J -----------------------------------------------------------------


def test_bessel_examples():
    assert bessel_j(0, 0) == 1.0
    assert bessel_j(0.5, math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-14)
    assert bessel_j(-0.5, 1.0) == pytest.approx(math.sqrt(2 / math.pi) * math.cos(1.0), rel=1e-14)
    assert bessel_j(-0.5, 1.0) == pytest.approx(0.43110, abs=1e-5)


def test_bessel_half_integer_closed_forms_across_range():
    t = np.linspace(0.5, T_MAX, 400)
    pref = np.sqrt(2 / (np.pi * t))
    assert np.max(np.abs(bessel_j(0.5, t) - pref * np.sin(t))) < 1e-7
    assert np.max(np.abs(bessel_j(-0.5, t) - pref * np.cos(t))) < 1e-7
    small = t <= 30
    assert np.max(np.abs(bessel_j(0.5, t[small]) - pref[small] * np.sin(t[small]))) < 1e-12


@pytest.mark.parametrize("nu", [0.0, 0.3, 1.0, 2.5, 7.25, -0.7, -2.4])
def test_bessel_against_scipy(nu):
    t = np.linspace(0.01, T_MAX, 300)
    assert np.max(np.abs(bessel_j(nu, t) - sp.jv(nu, t))) < 1e-7


def test_bessel_three_term_recurrence():
    nus = np.linspace(-3, 10, 27)
    t = np.linspace(0.05, 20, 80)
    for nu in nus:
        lhs = bessel_j(nu - 1, t) + bessel_j(nu + 1, t)
        mid = bessel_j(nu, t)
        err = np.abs(lhs - 2 * nu / t * mid)
        assert np.all(err <= 1e-9 * np.maximum(1, np.abs(mid)))


@pytest.mark.parametrize("nu", [0.0, 0.25, 1.0, 2.5])
def test_bessel_small_argument_law(nu):
    t = 1e-3
    assert bessel_j(nu, t) * gamma(nu + 1) * (2 / t) ** nu == pytest.approx(1, abs=1e-5)


def test_bessel_negative_integer_order():
    t = np.linspace(0, 30, 50)
    assert np.allclose(bessel_j(-3, t), -bessel_j(3, t), atol=0, rtol=0)
    assert np.allclose(bessel_j(-2, t), bessel_j(2, t), atol=0, rtol=0)


def test_bessel_errors():
    with pytest.raises(SingularityError):
        bessel_j(-0.5, 0.0)
    with pytest.raises(DomainError, match="exceeds"):
        bessel_j(1.0, T_MAX + 1)
    with pytest.raises(DomainError):
        bessel_j(1.0, -1.0)
    with pytest.raises(ConvergenceError):
        bessel_j(0.0, 20.0, SeriesParams(max_terms=5))


def test_series_params_validation():
    with pytest.raises(ValueError):
        SeriesParams(rel_tol=0)
    with pytest.raises(ValueError):
        SeriesParams(max_terms=0)


# -- j_nu -------------------------------------------------------------------


def test_j_lower_examples():
    r = np.array([0.1, 1.0, 7.5])
    assert np.allclose(j_lower(0.7, r, 2), bessel_j(0.7, r), rtol=1e-15, atol=0)
    assert j_lower(0, 1.0, 3) == pytest.approx(math.sqrt(2 / math.pi) * math.sin(1.0), rel=1e-14)
    assert j_lower(1, 0.0, 3) == 0.0
    assert j_lower(0, 0.0, 2) == 1.0


def test_j_lower_d3_limit_at_origin():
    # r^{-1/2} J_{1/2}(r) -> sqrt(2/pi) as r -> 0
    assert j_lower(0, 0.0, 3) == pytest.approx(math.sqrt(2 / math.pi), rel=1e-14)


def test_j_lower_singular_at_origin():
    with pytest.raises(SingularityError):
        j_lower(-0.25, 0.0, 3)
    assert np.isfinite(j_lower(-0.25, 1e-6, 3))


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.45, 6.0), st.floats(0.01, 50.0), st.integers(2, 5))
def test_j_lower_definition(nu, r, d):
    h = 0.5 * (d - 2)
    expect = r ** (-h) * sp.jv(nu + h, r)
    assert abs(j_lower(nu, r, d) - expect) <= 1e-7 * max(1.0, abs(expect))


# -- P_{j,n} ----------------------------------------------------------------


def test_pjn_examples():
    assert pjn_poly(0.3, 0, 3, 2.7) == 1.0
    assert pjn_poly(-1.2, 4, 3, 0.0) == 1.0
    for alpha, d, t in [(0.3, 3, 2.0), (-0.6, 3, 0.7), (0.1, 2, 5.0)]:
        assert pjn_poly(alpha, 1, d, t) == pytest.approx(1 - t / (d / 2 - alpha), rel=1e-14)


def test_pjn_is_confluent_hypergeometric():
    alpha, d = -0.618, 3
    t = np.linspace(0, 6, 13)
    for n in range(5):
        ref = sp.hyp1f1(-n, d / 2 - alpha, t)
        assert np.allclose(pjn_poly(alpha, n, d, t), ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5])
def test_pjn_degree_by_finite_differences(n):
    t = np.arange(n + 2, dtype=float) * 0.5
    vals = pjn_poly(0.25, n, 3, t)
    assert abs(np.diff(vals, n + 1)[0]) < 1e-10


def test_pjn_denominator_error():
    # d/2 - alpha = -1 makes (d/2 - alpha)_2 vanish
    with pytest.raises(DomainError):
        pjn_coefficients(2.5, 3, 3)
