import json
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import iv

from rmtexpand.cheb import parse_testfn
from rmtexpand.errors import EnsembleError, SizeError
from rmtexpand.exactalg import Poly
from rmtexpand.expand import (
    compose_inputs,
    engine_value,
    exact_expansion,
    loglog_slope,
    residual_scan,
    smooth_expansion,
)
from rmtexpand.ncpoly import parse_ncpoly

from test_gauss import harer_zagier

X1 = parse_ncpoly("x1")


def test_exact_expansion_x4():
    rep = exact_expansion("gue", [parse_ncpoly("x1^4")], 4)
    assert rep.coefficients == [2, 0, 1, 0]
    assert rep.odd_coefficients() == [0, 0]
    json.dumps(rep.to_json_obj())


def test_gse_expansion_from_goe():
    rep = exact_expansion("gse", [parse_ncpoly("x1^2")], 3)
    assert rep.coefficients == [1, Fraction(-1, 2), 0]


def test_residual_scan():
    rep = residual_scan("gue", [parse_ncpoly("x1^4")], 2, [4, 8, 16])
    assert [r["residual"] for r in rep.residuals] == [Fraction(1, 16), Fraction(1, 64), Fraction(1, 256)]
    assert rep.slope == pytest.approx(-2.0, abs=1e-12)
    assert loglog_slope([1, 2], [0, 0]) is None


def test_smooth_exp_against_moment_series():
    # E tr e^X = sum_n E tr X^(2n) / (2n)!, with genus counts from the Harer-Zagier recursion
    eps = harer_zagier(16)
    nu0 = sum(float(eps[n][0]) / math.factorial(2 * n) for n in range(17))
    nu2 = sum(float(eps[n][1]) / math.factorial(2 * n) for n in range(2, 17) if len(eps[n]) > 1)
    rep = smooth_expansion("gue", [X1], [parse_testfn("exp")], 4)
    assert rep.coefficients[0] == pytest.approx(nu0, abs=1e-9)
    assert rep.coefficients[2] == pytest.approx(nu2, abs=1e-7)
    assert abs(rep.coefficients[1]) < 1e-12 and abs(rep.coefficients[3]) < 1e-12
    assert rep.truncation_error < 1e-7


def test_smooth_leading_term_semicircle():
    h = parse_testfn("gauss-bump")
    val, _ = quad(lambda t: np.exp(-t * t) * math.sqrt(4 - t * t) / (2 * math.pi), -2, 2, epsabs=1e-13)
    rep = smooth_expansion("gue", [X1], [h], 2)
    assert rep.coefficients[0] == pytest.approx(val, abs=1e-7)


def test_smooth_polynomial_matches_exact():
    rep = smooth_expansion("gue", [X1], [parse_testfn("t^4")], 4)
    assert np.allclose(rep.coefficients, [2, 0, 1, 0], atol=1e-10)
    rep = smooth_expansion("goe", [X1], [parse_testfn("t^2")], 3)
    assert np.allclose(rep.coefficients, [1, 1, 0], atol=1e-10)


def test_smooth_haar_unitary():
    # E tr (U + U*)^n is the central binomial coefficient at every N, so only nu0 survives
    rep = smooth_expansion("haar-u", [parse_ncpoly("u1 + u1'")], [parse_testfn("exp")], 4)
    assert rep.coefficients[0] == pytest.approx(iv(0, 2), abs=1e-9)
    assert np.allclose(rep.coefficients[1:], 0, atol=1e-9)


def test_smooth_two_traces():
    # covariance of Tr X^2 style statistics: E[tr X^2 tr X^2] = 1 + 2 x^2
    rep = smooth_expansion("gue", [X1, X1], [parse_testfn("t^2")] * 2, 3)
    assert np.allclose(rep.coefficients, [1, 0, 2], atol=1e-10)


def test_compose_and_errors():
    (p,) = compose_inputs([parse_ncpoly("x1 + x2")], [parse_testfn("t^2")])
    assert engine_value("gue", [p]) == Poly.constant(2)
    with pytest.raises(ValueError):
        compose_inputs([X1], [parse_testfn("exp")])
    with pytest.raises(EnsembleError):
        engine_value("haar-o", [X1])
    with pytest.raises(SizeError):
        smooth_expansion("gue", [X1] * 3, [parse_testfn("exp")] * 3, 2, budget=10)
    with pytest.raises(ValueError):
        exact_expansion("gue", [X1], 0)
