import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import chebyshev as npcheb
from scipy.special import iv

from rmtexpand.cheb import (
    ChebSeries,
    cheb_adaptive,
    cheb_basis_poly,
    cheb_coeffs,
    cheb_of_poly,
    cheb_to_poly,
    parse_testfn,
    spectral_bound,
    tail_bound,
    truncate,
)
from rmtexpand.errors import NumericError
from rmtexpand.ncpoly import parse_ncpoly
from rmtexpand.sampler import evaluate_ncpoly, sample_gue

small_fracs = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@pytest.mark.parametrize("K", [1.0, 2.0, 3.5])
def test_exp_coefficients_bessel(K):
    # exp(K s) = I0(K) + 2 sum_j I_j(K) T_j(s)
    s = cheb_coeffs(np.exp, K, 65)
    want = np.array([iv(0, K)] + [2 * iv(j, K) for j in range(1, 65)])
    assert np.allclose(s.as_floats()[:30], want[:30], atol=1e-13)


def test_interpolant_accuracy():
    s = cheb_adaptive(lambda t: 1 / (1 + 25 * t**2), 1.0, tol=1e-12)
    t = np.linspace(-1, 1, 301)
    assert np.max(np.abs(s(t) - 1 / (1 + 25 * t**2))) < 1e-10
    with pytest.raises(ValueError):
        s(np.array([1.5]))


@given(st.lists(small_fracs, min_size=1, max_size=7))
def test_exact_poly_matches_numpy(c):
    s = cheb_of_poly(c)
    want = npcheb.poly2cheb([float(v) for v in c])
    got = s.as_floats()
    n = max(len(want), len(got))
    assert np.allclose(np.pad(got, (0, n - len(got))), np.pad(want, (0, n - len(want))), atol=1e-12)


@given(st.lists(small_fracs, min_size=1, max_size=7), st.sampled_from([1, 2, Fraction(5, 2)]))
def test_exact_round_trip(c, K):
    s = cheb_of_poly(c, K)
    back = cheb_to_poly(s)
    trimmed = list(c)
    while len(trimmed) > 1 and trimmed[-1] == 0:
        trimmed.pop()
    assert back == trimmed


@pytest.mark.parametrize("j", range(8))
def test_basis_polynomials(j):
    t = np.linspace(-2, 2, 41)
    coeffs = [float(v) for v in cheb_basis_poly(j, 2)]
    assert np.allclose(np.polynomial.polynomial.polyval(t, coeffs), np.cos(j * np.arccos(t / 2)), atol=1e-12)


def test_tail_and_truncate():
    s = ChebSeries(1.0, (1.0, 0.5, -0.25, 0.125))
    assert tail_bound(s, 1) == pytest.approx(0.375)
    t = truncate(s, 1)
    assert t.coeffs == (1.0, 0.5) and t.tail == pytest.approx(0.375)
    with pytest.raises(ValueError):
        truncate(t, 5)


def test_bad_inputs():
    with pytest.raises(ValueError):
        cheb_coeffs(np.exp, 1.0, 20)
    with pytest.raises(NumericError):
        cheb_coeffs(np.log, 1.0, 17)
    with pytest.raises(ValueError):
        ChebSeries(0.0, (1.0,))


def test_spectral_bound_dominates_samples():
    rng = np.random.default_rng(3)
    for text, want in [("x1", 2), ("x1*x2 + x2*x1 + x1^2", 12)]:
        P = parse_ncpoly(text)
        bound = spectral_bound("gue", P)
        assert bound == want
        mats = [sample_gue(200, rng) for _ in range(2)]
        Y = evaluate_ncpoly(mats, P, hermitian_letters=True)
        assert np.max(np.abs(np.linalg.eigvalsh(Y))) < float(bound) * 1.1
    assert spectral_bound("haar-u", parse_ncpoly("u1 + u1'")) == 2
    with pytest.raises(ValueError):
        spectral_bound("haar-u", parse_ncpoly("u1"))


def test_testfn_registry():
    assert parse_testfn("exp")(0.5) == pytest.approx(math.exp(0.5))
    assert parse_testfn("2*cos(3*t)")(0.2) == pytest.approx(2 * math.cos(0.6))
    p = parse_testfn("2*t^2 - 1")
    assert p.is_polynomial and p.poly == (-1, 0, 2)
    assert parse_testfn("poly:1,0,3").poly == (1, 0, 3)
    assert not parse_testfn("runge").is_polynomial
    for bad in ["nosuch", "poly:", "t'"]:
        with pytest.raises(ValueError):
            parse_testfn(bad)
