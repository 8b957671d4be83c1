import csv

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from rmtexpand.cheb import parse_testfn
from rmtexpand.errors import EnsembleError, NumericError, SizeError
from rmtexpand.ncpoly import parse_ncpoly
from rmtexpand.sampler import (
    FAMILIES,
    BatchConfig,
    battery,
    check_structure,
    draw_matrices,
    evaluate_ncpoly,
    family_dim,
    is_hermitian,
    is_self_dual,
    mc_expect_trace_product,
    normalized_trace,
    sample,
    trace_statistic,
    trace_vectors,
    write_csv,
)


@settings(max_examples=25)
@given(st.sampled_from(FAMILIES), st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_structure(family, N, seed):
    M = sample(family, N, np.random.default_rng(seed))
    assert M.shape == (family_dim(family, N),) * 2
    assert check_structure(family, M)


def test_predicates_reject():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    assert not check_structure("gue", A)
    assert not check_structure("haar-u", A)
    assert not check_structure("haar-o", sample("haar-u", 4, rng))
    assert not is_self_dual(sample("gue", 4, rng))


def test_gse_kramers_degeneracy():
    lam = np.linalg.eigvalsh(sample("gse", 6, np.random.default_rng(1)))
    assert np.allclose(lam[0::2], lam[1::2], atol=1e-10)


@pytest.mark.parametrize(
    "family,N,words,exact",
    [
        # classical compact-group moments, valid for N >= 2 in these cases
        ("haar-o", 5, ["x1"], 0.0),
        ("haar-o", 5, ["x1", "x1"], 1.0),
        ("haar-o", 5, ["x1^2"], 1.0),
        ("haar-sp", 4, ["x1", "x1"], 1.0),
        ("haar-sp", 4, ["x1^2"], -1.0),
        ("haar-u", 6, ["x1^2", "x1'^2"], 2.0),
        ("gue", 6, ["x1^2"], 6.0),
        ("goe", 6, ["x1^2"], 7.0),
        ("gse", 6, ["x1^2"], 11.0),
    ],
)
def test_unnormalised_moments(family, N, words, exact):
    cfg = BatchConfig(family, N, seed=9, draws=6000)
    Ps = [parse_ncpoly(w) for w in words]
    est = mc_expect_trace_product(cfg, Ps)
    dim = cfg.dim
    scale = dim ** len(Ps)
    assert abs(complex(est.mean) * scale - exact) < 4 * est.stderr * scale + 1e-12


def test_determinism_and_workers():
    P = [parse_ncpoly("x1*x2 + x2*x1")]
    a = trace_vectors(BatchConfig("gue", 8, d=2, seed=3, draws=300, chunk=64), P, [parse_testfn("exp")])
    b = trace_vectors(BatchConfig("gue", 8, d=2, seed=3, draws=300, chunk=64, workers=3), P, [parse_testfn("exp")])
    c = trace_vectors(BatchConfig("gue", 8, d=2, seed=4, draws=300, chunk=64), P, [parse_testfn("exp")])
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    # draw i does not depend on the batch size
    m1 = draw_matrices(BatchConfig("goe", 5, seed=2, draws=10), 7)
    m2 = draw_matrices(BatchConfig("goe", 5, seed=2, draws=1000), 7)
    assert np.array_equal(m1[0], m2[0])


def test_evaluate_against_numpy():
    rng = np.random.default_rng(4)
    A, B = sample("haar-u", 5, rng), sample("haar-u", 5, rng)
    P = parse_ncpoly("2*u1*u2' + u2*u1' - 3")
    want = 2 * A @ B.conj().T + B @ A.conj().T - 3 * np.eye(5)
    assert np.allclose(evaluate_ncpoly([A, B], P), want)
    H = evaluate_ncpoly([A], parse_ncpoly("u1 + u1'"))
    assert is_hermitian(H, tol=0)
    with pytest.raises(ValueError):
        evaluate_ncpoly([A], P)


def test_trace_statistic_against_expm():
    X = sample("gue", 7, np.random.default_rng(5))
    assert trace_statistic(X, np.exp) == pytest.approx(normalized_trace(scipy.linalg.expm(X)).real, rel=1e-12)


def test_battery_shares_draws():
    cfg = BatchConfig("gue", 6, seed=1, draws=400)
    x2 = parse_ncpoly("x1^2")
    est = battery(cfg, [[x2], [x2, x2]])
    single = mc_expect_trace_product(cfg, [x2, x2])
    assert est[1].mean == pytest.approx(single.mean, rel=1e-12)
    assert est[0].zscore(1.0) < 4


def test_write_csv(tmp_path):
    path = tmp_path / "draws.csv"
    write_csv(str(path), np.array([[1.0, 2.0], [3.0, 4.0]]))
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["draw", "statistic", "value"]
    assert rows[1:] == [["0", "0", "1.0"], ["0", "1", "2.0"], ["1", "0", "3.0"], ["1", "1", "4.0"]]


def test_config_errors():
    with pytest.raises(EnsembleError):
        BatchConfig("cue", 4)
    with pytest.raises(SizeError):
        BatchConfig("gue", 1)
    with pytest.raises(ValueError):
        trace_vectors(BatchConfig("gue", 4, draws=5), [parse_ncpoly("x2")])
    with pytest.raises(NumericError):
        trace_statistic(np.full((3, 3), np.nan), np.exp)
