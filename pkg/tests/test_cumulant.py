import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats
from scipy.special import iv

from rmtexpand.cheb import parse_testfn
from rmtexpand.combinat import set_partitions
from rmtexpand.cumulant import (
    MomentOracle,
    clt_report,
    cumulant_from_moments,
    cumulant_limit_from_expansions,
    free_energy_coeffs,
    k_statistic,
    k_statistics,
    moments_from_cumulants,
    observable_coeffs,
    sampled_scaled_cumulant,
    scaled_trace_cumulant_exact,
    smooth_cumulant_limit,
)
from rmtexpand.errors import SizeError
from rmtexpand.exactalg import RatFn
from rmtexpand.ncpoly import parse_ncpoly

X2 = parse_ncpoly("x1^2")


def chi2_scaled_cumulant(r):
    # N Tr X^2 ~ chi^2 with N^2 degrees of freedom, so N^-2 C_r = 2^(r-1) (r-1)!
    return 2 ** (r - 1) * math.factorial(r - 1)


@given(st.integers(1, 4), st.data())
def test_moment_cumulant_round_trip(r, data):
    blocks = {}

    def kappa(B):
        if B not in blocks:
            blocks[B] = Fraction(data.draw(st.integers(-4, 4)))
        return blocks[B]

    # all sub-blocks of range(r) need a cumulant value
    moments = {}
    for mask in range(1, 2**r):
        B = tuple(i for i in range(r) if mask >> i & 1)
        sub = [i for i in B]
        moments[B] = moments_from_cumulants(lambda b, sub=sub: kappa(tuple(sub[i] for i in b)), len(B))
    oracle = MomentOracle(r, values=moments)
    assert cumulant_from_moments(oracle) == kappa(tuple(range(r)))


def test_partitioned_cumulant():
    # C_pi for pi = {1,2}{3} factors as C_2 * C_1
    oracle = MomentOracle(3, values={(0,): 1, (1,): 2, (2,): 3, (0, 1): 5, (0, 2): 3, (1, 2): 6, (0, 1, 2): 15})
    pi = next(p for p in set_partitions(3) if p.blocks == ((1, 2), (3,)))
    assert cumulant_from_moments(oracle, pi) == (5 - 1 * 2) * 3


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_gue_chi_square_cumulants(r):
    rep = scaled_trace_cumulant_exact("gue", [X2] * r, Ns=[3, 7])
    assert rep.vanishing_ok
    assert rep.limit == chi2_scaled_cumulant(r)
    assert rep.exact_function == RatFn(chi2_scaled_cumulant(r))
    assert all(p["estimate"] == chi2_scaled_cumulant(r) for p in rep.per_N)


def test_limit_from_expansions():
    for ens, polys in [("gue", [X2] * 3), ("goe", [X2, X2]), ("gue", [parse_ncpoly("x1^4"), X2])]:
        rep = scaled_trace_cumulant_exact(ens, polys)
        assert cumulant_limit_from_expansions(ens, polys) == rep.limit


def test_goe_variance():
    # density exp(-N Tr X^2 / 4s) gives Var(N Tr X^2) = 4 s^2 d/ds E[N Tr X^2] = 4 N^2 (1 + 1/N)
    rep = scaled_trace_cumulant_exact("goe", [X2, X2], Ns=[5])
    assert rep.limit == 4
    assert rep.per_N[0]["estimate"] == Fraction(4 * (5 + 1), 5)


def test_haar_cumulants():
    P = parse_ncpoly("u1 + u1'")
    rep = scaled_trace_cumulant_exact("haar-u", [P] * 3)
    assert rep.vanishing_ok and rep.limit == 0
    rep = scaled_trace_cumulant_exact("haar-u", [parse_ncpoly("u1^2 + u1'^2")] * 2)
    assert rep.limit == 4


def test_cumulant_caps():
    with pytest.raises(SizeError):
        scaled_trace_cumulant_exact("gue", [X2] * 7)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_kstat_matches_scipy(order):
    y = np.random.default_rng(order).gamma(2.0, size=500)
    assert k_statistic(y, (0,) * order).estimate == pytest.approx(stats.kstat(y, order), rel=1e-9)


def test_kstat_coverage():
    # gamma(k) has cumulants (r-1)! k
    rng = np.random.default_rng(5)
    y = rng.gamma(3.0, size=20000)
    for r in (2, 3, 4):
        ks = k_statistic(y, (0,) * r)
        assert ks.zscore(math.factorial(r - 1) * 3.0) < 4


def test_joint_kstats():
    rng = np.random.default_rng(2)
    a = rng.normal(size=4000)
    Y = np.column_stack([a, a + rng.normal(size=4000)])
    ks = k_statistics(Y, order=2)
    assert ks[(0, 1)].zscore(1.0) < 4
    assert ks[(1, 1)].zscore(2.0) < 4
    with pytest.raises(ValueError):
        k_statistic(Y[:50], (0, 1))
    with pytest.warns(RuntimeWarning):
        k_statistic(np.ones(200), (0, 0))


def test_sampled_against_exact():
    h = parse_testfn("t^2")
    rep = sampled_scaled_cumulant("gue", [parse_ncpoly("x1")] * 2, [h, h], [8], draws=3000, seed=4)
    p = rep.per_N[0]
    assert abs(p["estimate"] - 2) < 4 * p["stderr"]


def test_clt_report_structure():
    rep = clt_report("haar-u", [parse_ncpoly("u1 + u1'")], [None], 16, 600, seed=1,
                     exact_polys=[parse_ncpoly("u1 + u1'")])
    c = rep["covariance_vs_exact"][0][0]
    assert c["exact"] == "2" and c["z"] < 4
    assert set(rep["coordinates"][0]) >= {"variance", "skewness", "excess_kurtosis", "ks_distance"}


def test_free_energy():
    table = free_energy_coeffs("gue", [X2], 3, [2, 5, 40])
    assert all(v == 1 for v in table[(1,)]["per_N"].values())
    assert all(v == 1 for v in table[(2,)]["per_N"].values())
    assert table[(3,)]["limit"] == Fraction(chi2_scaled_cumulant(3), 6)
    obs = observable_coeffs("gue", parse_ncpoly("x1^4"), [X2], 1, [4])
    # Cov(f, N Tr X^2) = 2 s^2 d/ds E f at s = 1, and E[N Tr X^4] = N^2 (2 + x^2) s^2
    assert obs[(0,)]["limit"] == 2
    assert obs[(1,)]["limit"] == 8
    with pytest.raises(SizeError):
        free_energy_coeffs("gue", [X2], 5, [2])


def test_smooth_covariance_gue():
    # f = sum a_k T_k(t/2) has limiting Var Tr f(X) = (1/4) sum k a_k^2; for exp a_k = 2 I_k(2)
    rep = smooth_cumulant_limit("gue", [parse_ncpoly("x1")] * 2, [parse_testfn("exp")] * 2)
    want = sum(k * iv(k, 2) ** 2 for k in range(1, 40))
    assert rep.vanishing_ok
    assert abs(rep.limit - want) <= max(rep.details["truncation_error"], 1e-9)
    assert rep.limit == pytest.approx(want, abs=1e-8)


def test_smooth_covariance_haar():
    # Var Tr g(U) = sum_k |k| |g_k|^2 with g(theta) = exp(2 cos theta), g_k = I_k(2)
    P = parse_ncpoly("u1 + u1'")
    rep = smooth_cumulant_limit("haar-u", [P, P], [parse_testfn("exp")] * 2)
    want = 2 * sum(k * iv(k, 2) ** 2 for k in range(1, 40))
    # the Haar length cap stops the series at degree 5, so only the reported bound applies
    assert rep.details["q"] == [5, 5]
    assert abs(rep.limit - want) <= rep.details["truncation_error"]
    assert abs(rep.limit - want) < 1e-4


def test_smooth_polynomial_path_agrees():
    rep = smooth_cumulant_limit("gue", [parse_ncpoly("x1")] * 3, [parse_testfn("t^2")] * 3)
    assert rep.limit == pytest.approx(8, abs=1e-9)


@pytest.mark.parametrize(
    "make,order,exact",
    [
        (lambda g: g.standard_normal(5000), 2, 1.0),
        (lambda g: g.standard_normal(5000), 3, 0.0),
        (lambda g: g.poisson(2.0, 5000).astype(float), 2, 2.0),
        (lambda g: g.poisson(2.0, 5000).astype(float), 3, 2.0),
    ],
)
def test_kstat_examples(make, order, exact):
    ks = k_statistic(make(np.random.default_rng(11)), (0,) * order)
    assert ks.zscore(exact) < 4
