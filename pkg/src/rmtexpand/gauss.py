"""Exact trace moments of Gaussian ensembles as polynomials in x = 1/N.

Normalisations: GUE has density proportional to exp(-N/2 Tr H^2), so every
entry has variance 1/N; GOE has density proportional to exp(-N/4 Tr H^2),
so E[X_ab X_cd] = (d_ac d_bd + d_ad d_bc)/N.  GSE values come from the GOE
polynomial evaluated at x = -1/(2N).

All results are exact for every N >= 1.  Internally the engine sums
N^(loops) over matched pairings of letter positions (one wiring per pair for
GUE, a straight and a twisted wiring for GOE), then divides by N^(k/2 + r).
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from .combinat import _DSU, cycle_counts, pairing_array
from .errors import ConsistencyError, EnsembleError, SizeError
from .exactalg import Poly, real_imag
from .ncpoly import EXACT, NCPoly, Word

MAX_K_GUE = 16
MAX_K_GOE = 12

ENSEMBLES = ("gue", "goe", "gse")


# ---------------------------------------------------------------------------
# word bookkeeping
# ---------------------------------------------------------------------------


def _min_rotation(w: Tuple) -> Tuple:
    if not w:
        return w
    return min(w[i:] + w[:i] for i in range(len(w)))


def canonical_key(words: Sequence[Word]) -> Tuple:
    """Key invariant under cyclic rotation of each word and reordering of traces.

    Empty words are dropped: tr 1 = 1 for the normalised trace.
    """
    return tuple(sorted(_min_rotation(tuple(w)) for w in words if len(w)))


def _flatten(words: Sequence[Word]) -> Tuple[List[int], np.ndarray]:
    """Letter labels per position and the cyclic successor gamma."""
    labels: List[int] = []
    gamma: List[int] = []
    pos = 0
    for w in words:
        s = len(w)
        for t, l in enumerate(w):
            if l.starred:
                raise EnsembleError("Gaussian ensembles are self-adjoint; starred letters are not allowed")
            labels.append(l.index)
            gamma.append(pos + (t + 1) % s)
        pos += s
    return labels, np.asarray(gamma, dtype=np.int64)


def _balanced(labels: Sequence[int]) -> bool:
    counts: Dict[int, int] = {}
    for a in labels:
        counts[a] = counts.get(a, 0) + 1
    return all(c % 2 == 0 for c in counts.values())


def _poly_from_exponents(hist: Dict[int, int]) -> Poly:
    if not hist:
        return Poly()
    deg = max(hist)
    return Poly([hist.get(i, 0) for i in range(deg + 1)])


# ---------------------------------------------------------------------------
# GUE
# ---------------------------------------------------------------------------


def _gue_exponents(words: Sequence[Word]) -> Dict[int, int]:
    labels, gamma = _flatten(words)
    k, r = len(labels), len(words)
    if k > MAX_K_GUE:
        raise SizeError(f"GUE engine supports total length <= {MAX_K_GUE}, got {k}")
    if not _balanced(labels):
        return {}
    if k == 0:
        return {0: 1}
    pi = pairing_array(labels)
    # loops of the slot graph = cycles of gamma o pi
    cyc = cycle_counts(gamma[pi.astype(np.int64)])
    exps = r + k // 2 - cyc
    if exps.min() < 0:
        raise ConsistencyError("negative power of x in GUE genus sum")
    counts = np.bincount(exps)
    return {i: int(c) for i, c in enumerate(counts) if c}


@lru_cache(maxsize=4096)
def _gue_cached(key: Tuple) -> Poly:
    return _poly_from_exponents(_gue_exponents(key))


def expect_trace_product_gue(words: Sequence[Word], d: int | None = None) -> Poly:
    """E[tr w_1 ... tr w_r] for independent GUE matrices, as a polynomial in x."""
    words = [tuple(w) for w in words]
    _check_alphabet(words, d)
    _flatten(words)  # reject starred letters before the cache lookup
    return _gue_cached(canonical_key(words))


# ---------------------------------------------------------------------------
# GOE
# ---------------------------------------------------------------------------


def _goe_exponents(words: Sequence[Word]) -> Dict[int, int]:
    labels, gamma = _flatten(words)
    k, r = len(labels), len(words)
    if k > MAX_K_GOE:
        raise SizeError(f"GOE engine supports total length <= {MAX_K_GOE}, got {k}")
    if not _balanced(labels):
        return {}
    if k == 0:
        return {0: 1}
    pi = pairing_array(labels).astype(np.int64)
    n_pair, half = pi.shape[0], k // 2
    idx = np.arange(k, dtype=np.int64)
    # rank of each pair (by its smaller endpoint) within the row
    is_first = pi > idx
    rank_at = np.cumsum(is_first, axis=1) - 1
    first = np.minimum(idx, pi)
    pair_rank = np.take_along_axis(rank_at, first, axis=1)

    # slot 2t = row(t), 2t+1 = col(t); trace wiring joins col(t) to row(gamma t)
    m1 = np.empty(2 * k, dtype=np.int64)
    m1[2 * idx + 1] = 2 * gamma
    m1[2 * gamma] = 2 * idx + 1

    masks = np.arange(1 << half, dtype=np.int64)
    hist: Dict[int, int] = {}
    for mask in masks:
        twist = (mask >> pair_rank) & 1  # (n_pair, k)
        m2 = np.empty((n_pair, 2 * k), dtype=np.int64)
        # straight: row(a)-col(b), col(a)-row(b); twisted: row-row, col-col
        m2[:, 2 * idx] = 2 * pi + 1 - twist
        m2[:, 2 * idx + 1] = 2 * pi + twist
        comp = cycle_counts(m2[:, m1]) // 2
        exps = r + half - comp
        for e, c in enumerate(np.bincount(exps)):
            if c:
                hist[e] = hist.get(e, 0) + int(c)
    return hist


@lru_cache(maxsize=4096)
def _goe_cached(key: Tuple) -> Poly:
    return _poly_from_exponents(_goe_exponents(key))


def expect_trace_product_goe(words: Sequence[Word], d: int | None = None) -> Poly:
    """E[tr w_1 ... tr w_r] for independent GOE matrices, as a polynomial in x."""
    words = [tuple(w) for w in words]
    _check_alphabet(words, d)
    _flatten(words)
    return _goe_cached(canonical_key(words))


def gse_polynomial(goe_poly: Poly) -> Poly:
    """The GSE expectation as a polynomial in x: the GOE polynomial at -x/2."""
    return goe_poly.compose_scale(Fraction(-1, 2))


def expect_trace_product_gse(words: Sequence[Word], d: int | None = None) -> Poly:
    return gse_polynomial(expect_trace_product_goe(words, d))


def expect_trace_product_gse_at(words: Sequence[Word], d: int | None, N: int) -> Fraction:
    """Exact GSE value at size N (traces normalised by 2N)."""
    if N < 1:
        raise ValueError("N must be positive")
    return expect_trace_product_goe(words, d)(Fraction(-1, 2 * N))


def _check_alphabet(words, d):
    if d is None:
        return
    for w in words:
        for l in w:
            if not 1 <= l.index <= d:
                raise ValueError(f"letter index {l.index} outside alphabet 1..{d}")


# ---------------------------------------------------------------------------
# scalar union-find realisation (cross-check of the vectorised engines)
# ---------------------------------------------------------------------------


def slot_loops(words: Sequence[Word], pairs: Iterable[Tuple[int, int]], twists: Dict | None = None) -> int:
    """Loops of the slot graph for one pairing, counted with union-find.

    ``twists`` maps a pair (a, b) to True for the transposed (GOE) wiring.
    """
    _, gamma = _flatten(words)
    k = len(gamma)
    dsu = _DSU(2 * k)
    for t in range(k):
        dsu.union(2 * t + 1, 2 * int(gamma[t]))
    twists = twists or {}
    for a, b in pairs:
        if twists.get((a, b), False):
            dsu.union(2 * a, 2 * b)
            dsu.union(2 * a + 1, 2 * b + 1)
        else:
            dsu.union(2 * a, 2 * b + 1)
            dsu.union(2 * a + 1, 2 * b)
    return len({dsu.find(i) for i in range(2 * k)})


def union_find_expectation(ensemble: str, words: Sequence[Word]) -> Poly:
    """Slow reference implementation of the GUE / GOE engines."""
    from itertools import product

    from .combinat import matched_pairings

    labels, _ = _flatten(words)
    k, r = len(labels), len(words)
    empty = sum(1 for w in words if not len(w))  # Tr 1 = N is one free loop each
    hist: Dict[int, int] = {}
    for perm in matched_pairings(labels):
        pairs = perm.pairs()
        choices = [(False,)] * len(pairs) if ensemble == "gue" else [(False, True)] * len(pairs)
        for tw in product(*choices):
            c = slot_loops(words, pairs, dict(zip(pairs, tw))) + empty
            e = r + k // 2 - c
            hist[e] = hist.get(e, 0) + 1
    if k == 0:
        hist = {0: 1}
    return _poly_from_exponents(hist)


# ---------------------------------------------------------------------------
# polynomial test functions
# ---------------------------------------------------------------------------


def _engine(ensemble: str):
    if ensemble == "gue":
        return expect_trace_product_gue
    if ensemble in ("goe", "gse"):
        return expect_trace_product_goe
    raise EnsembleError(f"unknown Gaussian ensemble {ensemble!r}")


def multilinear_terms(polys: Sequence[NCPoly]):
    """Yield (coefficient, words) over all term choices of a product of traces."""
    from itertools import product

    items = [list(p.terms.items()) for p in polys]
    for combo in product(*items):
        c = 1
        for _, v in combo:
            c = c * v
        yield c, [w for w, _ in combo]


def expect_ncpoly_product_gauss(ensemble: str, polys: Sequence[NCPoly]) -> Poly:
    """E[tr P_1 ... tr P_r] as a polynomial in x (GSE: already in the GSE variable).

    Coefficients must be exact; complex coefficients are allowed as long as
    the imaginary parts cancel.
    """
    ensemble = ensemble.lower()
    engine = _engine(ensemble)
    for p in polys:
        if p.domain != EXACT:
            raise ValueError("exact engine needs exact coefficients")
        if p.has_star():
            raise EnsembleError("Gaussian ensembles are self-adjoint; starred letters are not allowed")
    re_acc, im_acc = Poly(), Poly()
    for c, words in multilinear_terms(polys):
        val = engine(words)
        if val.is_zero():
            continue
        cr, ci = real_imag(c)
        if cr:
            re_acc = re_acc + val.scale(cr)
        if ci:
            im_acc = im_acc + val.scale(ci)
    if not im_acc.is_zero():
        raise ConsistencyError(f"imaginary part {im_acc} does not vanish")
    if ensemble == "gse":
        return gse_polynomial(re_acc)
    return re_acc


def clear_caches() -> None:
    _gue_cached.cache_clear()
    _goe_cached.cache_clear()
