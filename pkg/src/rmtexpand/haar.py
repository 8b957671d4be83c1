"""Exact trace moments of independent Haar unitaries via Weingarten calculus.

Conventions.  Letter u_l stands for U_l and u_l' for U_l^*, with
(U^*)_{rc} = conj(U_{cr}).  For a letter with U-positions p_1..p_m and
star positions q_1..q_m the integral

    E[prod U_{i_a j_a} prod conj(U_{i'_b j'_b})]
        = sum_{sigma, tau} prod d(i_a, i'_sigma(a)) d(j_a, j'_tau(a)) Wg(sigma^-1 tau)

joins row(p_a) to col(q_sigma(a)) and col(p_a) to row(q_tau(a)), because
the star entry's row index is the column index of the underlying U entry.
Results are rational functions of x = 1/N, exact for every N at least the
largest per-letter count.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .combinat import (
    IntPartition,
    Permutation,
    character,
    cycle_counts,
    dimension,
    integer_partitions,
    permutation_array,
)
from .errors import ConsistencyError, SizeError
from .exactalg import Poly, RatFn, divides, g_poly, real_imag, reverse_variable
from .gauss import canonical_key
from .ncpoly import EXACT, NCPoly, Word

MAX_LETTER_COUNT = 5
MAX_TOTAL_LENGTH = 12
MAX_WG_ORDER = 7


def c_lambda(lam) -> Poly:
    """Content polynomial prod over cells (i, j) of (N + j - i), as a Poly in N."""
    lam = lam if isinstance(lam, IntPartition) else IntPartition(tuple(lam))
    if lam.n > 8:
        raise SizeError("c_lambda supports |lambda| <= 8")
    out = Poly.constant(1)
    for i, j in lam.cells():
        out = out * Poly((j - i, 1))
    return out


@lru_cache(maxsize=None)
def _weingarten_cached(n: int, mu: Tuple[int, ...]) -> RatFn:
    total = RatFn(0)
    for lam in integer_partitions(n):
        chi = character(lam, mu)
        if chi:
            total = total + RatFn(Poly.constant(dimension(lam) * chi), c_lambda(lam))
    return total.scale(Fraction(1, math.factorial(n)))


def weingarten(n: int, mu) -> RatFn:
    """Wg_n at cycle type mu, a reduced rational function of N."""
    if not 0 <= n <= MAX_WG_ORDER:
        raise SizeError(f"weingarten supports n <= {MAX_WG_ORDER}, got {n}")
    mu = mu if isinstance(mu, IntPartition) else IntPartition(tuple(mu))
    if mu.n != n:
        raise ValueError(f"cycle type {mu.parts} is not a partition of {n}")
    if n == 0:
        return RatFn(1)
    return _weingarten_cached(n, mu.parts)


def weingarten_table(n: int) -> Dict[Tuple[int, ...], RatFn]:
    return {mu.parts: weingarten(n, mu) for mu in integer_partitions(n)}


@lru_cache(maxsize=None)
def _pair_classes(m: int) -> Tuple[np.ndarray, Tuple[Tuple[int, ...], ...]]:
    """Cycle-type class index of sigma^-1 tau for every (sigma, tau) pair."""
    perms = [Permutation(tuple(p)) for p in permutation_array(m)]
    types = [mu.parts for mu in integer_partitions(m)]
    where = {t: i for i, t in enumerate(types)}
    inv = [p.inverse() for p in perms]
    cls = np.empty(len(perms) ** 2, dtype=np.int64)
    for a, s in enumerate(inv):
        for b, t in enumerate(perms):
            cls[a * len(perms) + b] = where[(s * t).cycle_type().parts]
    return cls, tuple(types)


def _layout(words: Sequence[Word]):
    gamma: List[int] = []
    pos: Dict[int, Tuple[List[int], List[int]]] = {}
    t0 = 0
    for w in words:
        s = len(w)
        for t, l in enumerate(w):
            gamma.append(t0 + (t + 1) % s)
            pos.setdefault(l.index, ([], []))[1 if l.starred else 0].append(t0 + t)
        t0 += s
    return np.asarray(gamma, dtype=np.int64), pos


def _haar_groups(words: Sequence[Word]):
    """Histogram {(class tuple): {loops: count}} over all (sigma_l, tau_l)."""
    gamma, pos = _layout(words)
    k = len(gamma)
    letters = sorted(pos)
    idx = np.arange(k, dtype=np.int64)
    m1 = np.empty(2 * k, dtype=np.int64)
    m1[2 * idx + 1] = 2 * gamma
    m1[2 * gamma] = 2 * idx + 1

    # per letter: all (sigma, tau) as index rows into its star positions
    per_letter = []
    for l in letters:
        P, Q = (np.asarray(v, dtype=np.int64) for v in pos[l])
        m = len(P)
        perms = permutation_array(m).astype(np.int64)
        n = perms.shape[0]
        sig = np.repeat(perms, n, axis=0)
        tau = np.tile(perms, (n, 1))
        cls, _ = _pair_classes(m)
        per_letter.append((P, Q, sig, tau, cls))

    sizes = [pl[2].shape[0] for pl in per_letter]
    combo = np.indices(sizes).reshape(len(sizes), -1).T if sizes else np.zeros((1, 0), dtype=np.int64)
    n_combo = combo.shape[0]
    m2 = np.empty((n_combo, 2 * k), dtype=np.int64)
    classes = np.empty((n_combo, len(letters)), dtype=np.int64)
    for j, (P, Q, sig, tau, cls) in enumerate(per_letter):
        c = combo[:, j]
        qs = Q[sig[c]]  # star position joined to each P by sigma
        qt = Q[tau[c]]
        m2[:, 2 * P] = 2 * qs + 1
        m2[np.arange(n_combo)[:, None], 2 * qs + 1] = 2 * P
        m2[:, 2 * P + 1] = 2 * qt
        m2[np.arange(n_combo)[:, None], 2 * qt] = 2 * P + 1
        classes[:, j] = cls[c]
    loops = cycle_counts(m2[:, m1]) // 2
    keys = np.concatenate([classes, loops[:, None]], axis=1)
    uniq, counts = np.unique(keys, axis=0, return_counts=True)
    groups: Dict[Tuple[int, ...], Dict[int, int]] = {}
    for row, c in zip(uniq, counts):
        g = groups.setdefault(tuple(int(v) for v in row[:-1]), {})
        g[int(row[-1])] = g.get(int(row[-1]), 0) + int(c)
    ms = [len(pos[l][0]) for l in letters]
    return groups, ms


def _letter_counts(words: Sequence[Word]) -> Dict[int, List[int]]:
    counts: Dict[int, List[int]] = {}
    for w in words:
        for l in w:
            c = counts.setdefault(l.index, [0, 0])
            c[1 if l.starred else 0] += 1
    return counts


def _balanced(counts: Dict[int, List[int]]) -> bool:
    return all(a == b for a, b in counts.values())


def _check_caps(words: Sequence[Word]) -> Dict[int, List[int]]:
    """Letter counts; unbalanced tuples vanish, so caps apply to balanced ones only."""
    counts = _letter_counts(words)
    if not _balanced(counts):
        return counts
    total = sum(a + b for a, b in counts.values())
    if total > MAX_TOTAL_LENGTH:
        raise SizeError(f"Haar engine supports total length <= {MAX_TOTAL_LENGTH}, got {total}")
    for l, (a, b) in counts.items():
        if max(a, b) > MAX_LETTER_COUNT:
            raise SizeError(f"letter u{l} occurs more than {MAX_LETTER_COUNT} times")
    return counts


@lru_cache(maxsize=4096)
def _haar_cached(key: Tuple) -> RatFn:
    words = list(key)
    counts = _check_caps(words)
    if not _balanced(counts):
        return RatFn(0)
    r = len(words)
    if not counts:
        return RatFn(1)
    groups, ms = _haar_groups(words)
    types = [_pair_classes(m)[1] for m in ms]
    total_N = RatFn(0)
    for cls, hist in groups.items():
        loops_poly = Poly([hist.get(i, 0) for i in range(max(hist) + 1)])
        wg = RatFn(1)
        for m, t, c in zip(ms, types, cls):
            wg = wg * weingarten(m, t[c])
        total_N = total_N + wg * RatFn(loops_poly)
    total_N = total_N * RatFn(Poly.constant(1), Poly.monomial(r))
    return reverse_variable(total_N)


def expect_trace_product_haar_u(words: Sequence[Word]) -> RatFn:
    """E[tr w_1 ... tr w_r] for independent Haar unitaries, as a rational function of x."""
    words = [tuple(w) for w in words]
    _check_caps(words)
    return _haar_cached(canonical_key(words))


def expect_ncpoly_product_haar_u(polys: Sequence[NCPoly]) -> RatFn:
    """Multilinear extension of the word engine; the imaginary part must cancel."""
    from .gauss import multilinear_terms

    for p in polys:
        if p.domain != EXACT:
            raise ValueError("exact engine needs exact coefficients")
    re_acc, im_acc = RatFn(0), RatFn(0)
    for c, words in multilinear_terms(polys):
        val = expect_trace_product_haar_u(words)
        if val.is_zero():
            continue
        cr, ci = real_imag(c)
        if cr:
            re_acc = re_acc + val.scale(cr)
        if ci:
            im_acc = im_acc + val.scale(ci)
    if not im_acc.is_zero():
        raise ConsistencyError(f"imaginary part {im_acc} does not vanish")
    return re_acc


def denominator_bound(k: int) -> Poly:
    """x-form of N^k prod_j (N^2 - j^2)^floor(k/j), with the power of x dropped."""
    return g_poly(k) if k >= 1 else Poly.constant(1)


def denominator_ok(r: RatFn, k: int) -> bool:
    den = r.den
    v = max(den.valuation(), 0)
    return divides(den.shift(-v), denominator_bound(k))


def clear_caches() -> None:
    _haar_cached.cache_clear()
