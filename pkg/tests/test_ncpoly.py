from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rmtexpand.errors import SizeError
from rmtexpand.exactalg import ComplexRational
from rmtexpand.ncpoly import (
    FLOAT,
    Letter,
    NCPoly,
    adjoint,
    format_ncpoly,
    is_selfadjoint,
    parse_ncpoly,
    reduce_unitary_words,
    strip_stars,
    substitute,
    univariate_coefficients,
    word,
    word_adjoint,
)

letters = st.builds(Letter, st.integers(1, 3), st.booleans())
words = st.lists(letters, max_size=4).map(tuple)
coeffs = st.one_of(
    st.fractions(min_value=-5, max_value=5, max_denominator=6),
    st.builds(ComplexRational, st.integers(-3, 3), st.integers(-3, 3)),
)
ncpolys = st.dictionaries(words, coeffs, max_size=4).map(NCPoly)
univariate = st.lists(st.integers(-3, 3), max_size=4)


def poly_mult(a, b):
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


@given(ncpolys)
def test_adjoint_involution(p):
    assert adjoint(adjoint(p)) == p


@given(ncpolys, ncpolys)
def test_adjoint_reverses_products(p, q):
    assert adjoint(p * q) == adjoint(q) * adjoint(p)
    assert adjoint(p + q) == adjoint(p) + adjoint(q)


@given(ncpolys)
def test_sum_with_adjoint_selfadjoint(p):
    assert is_selfadjoint(p + adjoint(p))


@given(ncpolys, ncpolys, ncpolys)
def test_algebra_laws(p, q, r):
    assert (p + q) * r == p * r + q * r
    assert (p * q) * r == p * (q * r)
    assert p - p == NCPoly()


@given(ncpolys)
def test_format_parse_round_trip(p):
    assert parse_ncpoly(format_ncpoly(p)) == p


@given(univariate, univariate, ncpolys.filter(lambda p: p.degree <= 2))
def test_substitute_multiplicative(h1, h2, P):
    lhs = substitute(poly_mult(h1, h2), P)
    rhs = substitute(h1, P) * substitute(h2, P)
    assert lhs == rhs


@given(univariate, univariate, ncpolys.filter(lambda p: p.degree <= 2))
def test_substitute_additive(h1, h2, P):
    n = max(len(h1), len(h2))
    s = [(h1[i] if i < len(h1) else 0) + (h2[i] if i < len(h2) else 0) for i in range(n)]
    assert substitute(s, P) == substitute(h1, P) + substitute(h2, P)


def test_substitute_cap():
    P = parse_ncpoly("x1*x2 + x1")
    assert substitute([0, 0, 1], P) == P * P
    with pytest.raises(SizeError):
        substitute([0] * 7 + [1], P)


def test_parse_examples():
    p = parse_ncpoly("2*x1*x2^2 + x1'")
    assert p == NCPoly({word(1, 2, 2): 2, word((1, True)): 1})
    assert format_ncpoly(p) == format_ncpoly(parse_ncpoly(format_ncpoly(p)))
    q = parse_ncpoly("(x1 + i*x2)/2")
    assert q.terms[word(2)] == ComplexRational(0, Fraction(1, 2))
    u = parse_ncpoly("u1*u2'")
    assert u.symbol == "u"
    for bad in ["", "x1 +", "x1 * y2", "x1^-1", "x1/x2"]:
        with pytest.raises(ValueError):
            parse_ncpoly(bad)


def test_float_domain():
    p = NCPoly({word(1): 0.5})
    assert p.domain == FLOAT
    with pytest.raises(ValueError):
        p + NCPoly({word(2): Fraction(1)})


def test_word_helpers():
    assert word_adjoint(word(1, (2, True))) == word(2, (1, True))
    p = parse_ncpoly("u1*u1'*u2 + u2'*u2")
    assert reduce_unitary_words(p) == parse_ncpoly("u2 + 1")
    assert univariate_coefficients(parse_ncpoly("3 - t^2", symbol="t")) == [3, 0, -1]
    assert strip_stars(parse_ncpoly("x1' + x1")) == parse_ncpoly("2*x1")


def test_selfadjoint_modes():
    x = parse_ncpoly("x1*x2")
    assert not is_selfadjoint(x)
    assert not is_selfadjoint(x, hermitian_letters=True)
    assert is_selfadjoint(parse_ncpoly("x1*x2 + x2*x1"), hermitian_letters=True)
    assert is_selfadjoint(parse_ncpoly("x1"), hermitian_letters=True)
    assert is_selfadjoint(parse_ncpoly("u1 + u1'"))
