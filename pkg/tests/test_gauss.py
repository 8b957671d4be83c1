from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from rmtexpand.acceptance import entrywise_oracle, oracle_matches, word_tuples
from rmtexpand.errors import ConsistencyError, EnsembleError, SizeError
from rmtexpand.exactalg import Poly
from rmtexpand.gauss import (
    canonical_key,
    expect_ncpoly_product_gauss,
    expect_trace_product_goe,
    expect_trace_product_gse,
    expect_trace_product_gse_at,
    expect_trace_product_gue,
    gse_polynomial,
    union_find_expectation,
)
from rmtexpand.ncpoly import Letter, parse_ncpoly, word

plain_words = st.lists(st.integers(1, 2).map(Letter), min_size=1, max_size=4).map(tuple)
tuples = st.lists(plain_words, min_size=1, max_size=2).filter(lambda t: sum(map(len, t)) <= 8)


def harer_zagier(n_max):
    """eps[n][g] from (n+1) e_g(n) = 2(2n-1) e_g(n-1) + (n-1)(2n-1)(2n-3) e_{g-1}(n-2)."""
    eps = [[1], [1]]
    for n in range(2, n_max + 1):
        row = [0] * (n // 2 + 1)
        for g in range(len(row)):
            a = eps[n - 1][g] if g < len(eps[n - 1]) else 0
            b = eps[n - 2][g - 1] if 0 <= g - 1 < len(eps[n - 2]) else 0
            row[g] = Fraction(2 * (2 * n - 1) * a + (n - 1) * (2 * n - 1) * (2 * n - 3) * b, n + 1)
        eps.append(row)
    return eps


def test_harer_zagier():
    eps = harer_zagier(8)
    for n in range(1, 9):
        p = expect_trace_product_gue([word(*[1] * (2 * n))])
        want = Poly([eps[n][g // 2] if g % 2 == 0 else 0 for g in range(2 * (len(eps[n]) - 1) + 1)])
        assert p == want, n


def test_known_values():
    x = Poly.x()
    assert expect_trace_product_gue([word(1, 1, 1, 1)]) == Poly((2, 0, 1))
    assert expect_trace_product_gue([word(1, 2, 1, 2)]) == x * x
    assert expect_trace_product_gue([word(1, 1), word(1, 1)]) == Poly((1, 0, 2))
    assert expect_trace_product_goe([word(1, 1)]) == Poly((1, 1))
    assert expect_trace_product_goe([word(1), word(1)]) == (x * x).scale(2)
    assert expect_trace_product_goe([word(1, 2, 1, 2)]) == Poly((0, 1, 3))
    assert expect_trace_product_goe([word(1, 1, 1, 1)]) == Poly((2, 5, 5))
    assert expect_trace_product_gue([word(1, 1, 1)]) == Poly()


@given(tuples)
def test_union_find_agrees(t):
    assert expect_trace_product_gue(t) == union_find_expectation("gue", t)
    assert expect_trace_product_goe(t) == union_find_expectation("goe", t)


@given(tuples)
def test_gue_even(t):
    assert expect_trace_product_gue(t).is_even()


@given(tuples)
def test_rotation_invariance(t):
    rotated = [w[1:] + w[:1] for w in t][::-1]
    assert expect_trace_product_gue(rotated) == expect_trace_product_gue(t)
    assert canonical_key(rotated) == canonical_key(t)


def test_goe_matches_entrywise_oracle():
    seen = set()
    for t in word_tuples((1, 2), 6, 1) + word_tuples((1, 2), 6, 2):
        key = canonical_key(t)
        if key in seen:
            continue
        seen.add(key)
        assert oracle_matches("goe", key, expect_trace_product_goe(key)), key


def test_entrywise_oracle_small():
    # E Tr X^2 = N^2 * (1/N) for GUE: P(N) = N^2, exponent 1
    P, e = entrywise_oracle("gue", [word(1, 1)])
    assert (P, e) == (Poly((0, 0, 1)), 1)


def test_gse_duality():
    goe = expect_trace_product_goe([word(1, 1, 1, 1)])
    assert gse_polynomial(goe) == Poly((2, Fraction(-5, 2), Fraction(5, 4)))
    assert expect_trace_product_gse([word(1, 1)]) == Poly((1, Fraction(-1, 2)))
    assert expect_trace_product_gse_at([word(1, 1)], None, 16) == Fraction(31, 32)


def test_multilinear():
    P = parse_ncpoly("x1 + 2*x2")
    val = expect_ncpoly_product_gauss("gue", [P * P])
    assert val == Poly.constant(5)
    Q = parse_ncpoly("x1*x2 + x2*x1")
    assert expect_ncpoly_product_gauss("gue", [Q, Q]) == (Poly.x() ** 2).scale(4)


def test_errors():
    with pytest.raises(EnsembleError):
        expect_trace_product_gue([word((1, True), 1)])
    with pytest.raises(SizeError):
        expect_trace_product_gue([word(*[1] * 18)])
    with pytest.raises(SizeError):
        expect_trace_product_goe([word(*[1] * 14)])
    with pytest.raises(ConsistencyError):
        expect_ncpoly_product_gauss("gue", [parse_ncpoly("i*x1^2")])


def test_empty_words_are_unit_traces():
    for t in [[(), word(1, 1)], [()], [(), ()], [(), word(1), word(1)]]:
        for ens, engine in [("gue", expect_trace_product_gue), ("goe", expect_trace_product_goe)]:
            v = engine(t)
            assert v == engine([w for w in t if w])
            assert v == union_find_expectation(ens, t)
            assert oracle_matches(ens, t, v)
