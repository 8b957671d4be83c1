import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmtexpand.combinat import (
    SetPartition,
    _DSU,
    character,
    class_size,
    cycle_counts,
    delta_table,
    dimension,
    double_factorial,
    incidence_convolve,
    integer_partitions,
    join,
    leq,
    matched_pairings,
    meet,
    moebius,
    moebius_table,
    one_partition,
    pairing_array,
    pairing_count,
    permutation_array,
    Permutation,
    set_partitions,
    zero_partition,
    zeta_table,
)
from rmtexpand.errors import SizeError

BELL = [1, 1, 2, 5, 15, 52, 203, 877, 4140]
PARTITION_NUMBERS = [1, 1, 2, 3, 5, 7, 11, 15, 22]


def labels_strategy(max_k=7):
    return st.integers(1, max_k).flatmap(lambda k: st.lists(st.integers(0, k - 1), min_size=k, max_size=k))


@pytest.mark.parametrize("k", range(1, 9))
def test_bell_numbers(k):
    parts = set_partitions(k)
    assert len(parts) == BELL[k]
    assert len(set(parts)) == BELL[k]


@pytest.mark.parametrize("n", range(1, 9))
def test_partition_numbers(n):
    assert len(integer_partitions(n)) == PARTITION_NUMBERS[n]


def test_canonical_form():
    a = SetPartition.from_blocks([(3, 1), (2,)])
    b = SetPartition.from_blocks([(2,), (1, 3)])
    assert a == b
    assert a.block_index() == (0, 1, 0)
    with pytest.raises(ValueError):
        SetPartition.from_blocks([(1, 2), (2, 3)], k=3)


@pytest.mark.parametrize("k", range(1, 7))
def test_moebius_full_interval(k):
    # classical value (-1)^(k-1) (k-1)!
    assert moebius(zero_partition(k), one_partition(k)) == (-1) ** (k - 1) * math.factorial(k - 1)


@given(labels_strategy(), st.data())
def test_lattice_laws(labels, data):
    k = len(labels)
    other = data.draw(st.lists(st.integers(0, k - 1), min_size=k, max_size=k))
    p, q = SetPartition.from_labels(labels), SetPartition.from_labels(other)
    m, j = meet(p, q), join(p, q)
    assert leq(m, p) and leq(m, q) and leq(p, j) and leq(q, j)
    assert meet(p, j) == p and join(p, m) == p
    assert meet(p, q) == meet(q, p) and join(p, q) == join(q, p)


@pytest.mark.parametrize("k", range(1, 6))
def test_moebius_inversion_tables(k):
    assert incidence_convolve(moebius_table(k), zeta_table(k), k) == delta_table(k)
    assert incidence_convolve(zeta_table(k), moebius_table(k), k) == delta_table(k)


@given(st.integers(1, 5), st.data())
def test_moebius_round_trip(k, data):
    parts = set_partitions(k)
    f = {p: Fraction(data.draw(st.integers(-5, 5))) for p in parts}
    g = {b: sum(f[a] for a in parts if leq(a, b)) for b in parts}
    back = {b: sum(g[a] * moebius(a, b) for a in parts if leq(a, b)) for b in parts}
    assert back == f


@pytest.mark.parametrize("n", range(1, 7))
def test_character_orthogonality(n):
    lams = integer_partitions(n)
    assert sum(dimension(l) ** 2 for l in lams) == math.factorial(n)
    for mu in lams:
        # column orthogonality: sum_lambda chi(mu)^2 = |centraliser of mu|
        assert sum(character(l, mu) ** 2 for l in lams) * class_size(mu) == math.factorial(n)
    for l in lams:
        assert character(l, (1,) * n) == dimension(l)
        # row orthogonality with the trivial character
        total = sum(class_size(mu) * character(l, mu) for mu in lams)
        assert total == (math.factorial(n) if len(l) == 1 else 0)


@given(st.permutations(list(range(9))))
def test_cycle_counts_matches_cycles(perm):
    p = Permutation(tuple(perm))
    assert cycle_counts(np.array([perm]))[0] == len(p.cycles())
    assert sum(p.cycle_type().parts) == 9


def test_cycle_counts_chunks():
    perms = permutation_array(5)
    want = np.array([len(Permutation(tuple(r)).cycles()) for r in perms])
    assert np.array_equal(cycle_counts(perms, chunk=7), want)
    assert Counter(want.tolist())[5] == 1


@given(labels_strategy(8))
def test_pairings_agree(labels):
    lazy = {p.images for p in matched_pairings(labels)}
    arr = {tuple(int(v) for v in r) for r in pairing_array(labels)}
    assert lazy == arr
    assert len(arr) == pairing_count(labels)
    for row in arr:
        for i, j in enumerate(row):
            assert row[j] == i and i != j and labels[i] == labels[j]


def test_pairing_counts():
    assert pairing_count([0] * 8) == double_factorial(7) == 105
    assert pairing_count([0, 0, 1]) == 0
    with pytest.raises(SizeError):
        pairing_array([0] * 40)


def test_dsu():
    d = _DSU(5)
    d.union(0, 3)
    d.union(3, 4)
    assert d.find(4) == d.find(0) != d.find(1)
