"""Acceptance battery shared by the test suite and ``rmtexpand selftest``.

Each criterion returns a ``Result``; ``run_all`` prints one line per
criterion.  The entrywise Gaussian oracle used by criterion 3 sums over
equality patterns of matrix indices and never looks at pairings or loops.
"""

from __future__ import annotations

import itertools
import math
import time
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

from .combinat import (
    delta_table,
    incidence_convolve,
    integer_partitions,
    moebius_table,
    permutation_array,
    set_partitions,
    zeta_table,
    Permutation,
)
from .exactalg import Poly, RatFn, series_expand
from .ncpoly import Letter, NCPoly, parse_ncpoly, word


@dataclass
class Result:
    cid: int
    name: str
    passed: bool
    detail: str
    seconds: float
    limit: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        budget = f" (limit {self.limit:g}s)" if self.limit else ""
        return f"[{status}] criterion {self.cid:2d} {self.name}: {self.detail} [{self.seconds:.2f}s{budget}]"


def _timed(cid: int, name: str, limit: float | None, fn: Callable[[], Tuple[bool, str]]) -> Result:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if limit is not None and dt > limit:
        ok = False
        detail += f"; runtime {dt:.1f}s over budget"
    return Result(cid, name, ok, detail, dt, limit)


# ---------------------------------------------------------------------------
# entrywise Gaussian oracle
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _labelings(k: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(p.block_index() for p in set_partitions(k))


def _falling(b: int) -> Poly:
    out = Poly.constant(1)
    for j in range(b):
        out = out * Poly((-j, 1))
    return out


def _double_fact(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def entrywise_oracle(ensemble: str, words: Sequence[Tuple[Letter, ...]]) -> Tuple[Poly, int]:
    """E[Tr w_1 ... Tr w_r] = P(N) / N^e, returned as (P, e).

    Sums over the equality pattern of the k row indices; each pattern
    contributes N(N-1)...(N-b+1) times a product of entry moments.
    GUE: E x^(2m) = (2m-1)!!/N^m on the diagonal, E z^a conj(z)^b =
    d_ab a!/N^a off it.  GOE: (2m-1)!!/N^m off-diagonal, (2m-1)!! 2^m/N^m
    on the diagonal.
    """
    positions = [(w, t) for w in range(len(words)) for t in range(len(words[w]))]
    k = len(positions)
    flat = [words[w][t].index for w, t in positions]
    start = np.cumsum([0] + [len(w) for w in words])
    nxt = [start[w] + (t + 1) % len(words[w]) for w, t in positions]
    if k % 2:
        return Poly(), 0
    total = Poly() if k else Poly.constant(1)
    for lab in (_labelings(k) if k else ()):
        groups: Counter = Counter()
        for p in range(k):
            a, b = lab[p], lab[nxt[p]]
            if ensemble == "gue":
                groups[(flat[p], a, b)] += 1
            else:
                groups[(flat[p], min(a, b), max(a, b))] += 1
        coeff = 1
        seen = set()
        for (l, a, b), cnt in groups.items():
            if ensemble == "gue":
                if a == b:
                    if cnt % 2:
                        coeff = 0
                        break
                    coeff *= _double_fact(cnt - 1)
                elif (l, b, a) not in seen:
                    seen.add((l, a, b))
                    if groups.get((l, b, a), 0) != cnt:
                        coeff = 0
                        break
                    coeff *= math.factorial(cnt)
            else:
                if cnt % 2:
                    coeff = 0
                    break
                coeff *= _double_fact(cnt - 1) * (2 ** (cnt // 2) if a == b else 1)
        if coeff:
            total = total + _falling(max(lab) + 1).scale(coeff)
    # each empty word is Tr 1 = N
    for w in words:
        if not len(w):
            total = total * Poly.x()
    return total, k // 2


def oracle_matches(ensemble: str, words, engine_poly: Poly) -> bool:
    """engine(x) equals P(N) / N^(k/2 + r) as an identity in N."""
    P, e = entrywise_oracle(ensemble, words)
    r = len(words)
    if engine_poly.is_zero() or P.is_zero():
        return engine_poly.is_zero() and P.is_zero()
    # N^(e + r) engine(1/N) must be the polynomial P(N)
    deg = e + r
    if engine_poly.degree > deg:
        return False
    lhs = Poly([engine_poly[deg - j] for j in range(deg + 1)])
    return lhs == P


def word_tuples(letters: Sequence[int], max_total: int, traces: int) -> List[Tuple]:
    words = [tuple(Letter(i) for i in w) for L in range(1, max_total + 1) for w in itertools.product(letters, repeat=L)]
    if traces == 1:
        return [(w,) for w in words]
    return [(a, b) for a in words for b in words if len(a) + len(b) <= max_total]


# ---------------------------------------------------------------------------
# batteries
# ---------------------------------------------------------------------------


def gue_battery() -> List[Tuple]:
    from .gauss import canonical_key

    seen, out = set(), []
    for t in word_tuples((1, 2), 8, 1) + word_tuples((1, 2), 8, 2):
        key = canonical_key(t)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def haar_battery() -> List[Tuple]:
    """Balanced tuples of one or two traces over u1, u1', u2, u2' (total length <= 6) plus longer single-letter words."""
    from .gauss import canonical_key

    alphabet = [Letter(1), Letter(1, True), Letter(2), Letter(2, True)]
    words = [w for L in range(1, 7) for w in itertools.product(alphabet, repeat=L)]
    tuples = [(w,) for w in words] + [(a, b) for a in words for b in words if len(a) + len(b) <= 6]
    tuples += [
        (word(1, 1, 1, 1), word((1, True), (1, True), (1, True), (1, True))),
        (word(1, 1, (1, True), 1, (1, True), (1, True), 1, (1, True)),),
        (word(1, 2, 1, (2, True), (1, True), 2, (1, True), (2, True)),),
        (word(1, 1, 1), word((1, True), (1, True)), word((1, True))),
    ]
    seen, out = set(), []
    for t in tuples:
        c = Counter((l.index, l.starred) for w in t for l in w)
        if any(c[(i, False)] != c[(i, True)] for i in (1, 2)):
            continue
        key = canonical_key(t)
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def _P(s: str) -> NCPoly:
    return parse_ncpoly(s)


MC_BATTERY = {
    "gue": [
        ["x1^2"], ["x1^4"], ["x1*x2*x1*x2"], ["x1^2*x2^2"], ["x1^6"],
        ["x1^2", "x1^2"], ["x1", "x1"], ["x1^3", "x1"], ["x1*x2", "x1*x2"], ["(x1 + x2)^2"],
    ],
    "goe": [
        ["x1^2"], ["x1^4"], ["x1*x2*x1*x2"], ["x1^2*x2^2"],
        ["x1", "x1"], ["x1^2", "x1^2"], ["x1^3", "x1"], ["x1*x2", "x2*x1"],
    ],
    "haar-u": [
        ["u1", "u1'"], ["u1^2", "u1'^2"], ["u1*u2*u1'*u2'"], ["u1*u2", "u2'*u1'"],
        ["u1", "u1", "u1'", "u1'"], ["u1^2*u2*u1'^2*u2'"], ["u1 + u1'", "u1 + u1'"], ["(u1 + u1')^2"],
        ["u1^3", "u1'^3"],
    ],
}


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1() -> Result:
    def body():
        for k in range(1, 7):
            if incidence_convolve(moebius_table(k), zeta_table(k), k) != delta_table(k):
                return False, f"Moeb * zeta != delta at k={k}"
        return True, "Moeb * zeta = delta on Part(k) for k = 1..6"

    return _timed(1, "Moebius inversion", 5.0, body)


def criterion_2() -> Result:
    from .haar import expect_trace_product_haar_u, weingarten

    def body():
        Nv = Poly.x()
        checks = {
            "Wg1(1)": (weingarten(1, (1,)), RatFn(Poly.constant(1), Nv)),
            "Wg2(1,1)": (weingarten(2, (1, 1)), RatFn(Poly.constant(1), Nv * Nv - 1)),
            "Wg2(2)": (weingarten(2, (2,)), RatFn(Poly.constant(-1), Nv * (Nv * Nv - 1))),
        }
        for name, (got, want) in checks.items():
            if got != want:
                return False, f"{name} = {got}, expected {want}"
        # orthogonality: sum_tau Wg(sigma tau^-1) N^#cycles(tau) = [sigma = id]
        for n in range(1, 6):
            perms = [Permutation(tuple(p)) for p in permutation_array(n)]
            for mu in integer_partitions(n):
                sigma = _perm_of_type(mu.parts)
                total = RatFn(0)
                grouped: Dict[Tuple, int] = Counter()
                for tau in perms:
                    ct = (sigma * tau.inverse()).cycle_type().parts
                    grouped[(ct, len(tau.cycles()))] += 1
                for (ct, c), cnt in grouped.items():
                    total = total + weingarten(n, ct) * RatFn(Poly.monomial(c, cnt))
                want = RatFn(1) if all(p == 1 for p in mu.parts) else RatFn(0)
                if total != want:
                    return False, f"orthogonality fails at n={n}, sigma type {mu.parts}"
        # E[Tr U Tr U*] = N^2 E[tr U tr U*] = 1, and E|Tr U^j|^2 = j
        for j in range(1, 6):
            val = expect_trace_product_haar_u([word(*[1] * j), word(*[(1, True)] * j)])
            if val != RatFn(Poly.monomial(2, j)):
                return False, f"E[tr U^{j} tr U*^{j}] = {val}, expected {j} x^2"
        return True, "Wg values exact; orthogonality for n <= 5; N^2 E[tr U^j tr U*^j] = j for j <= 5"

    return _timed(2, "Weingarten values", 10.0, body)


def _perm_of_type(parts: Sequence[int]) -> Permutation:
    images, start = [], 0
    for p in parts:
        images += [start + (i + 1) % p for i in range(p)]
        start += p
    return Permutation(tuple(images))


def criterion_3() -> Result:
    from .gauss import expect_trace_product_gue

    def body():
        battery = gue_battery()
        for t in battery:
            if not oracle_matches("gue", t, expect_trace_product_gue(t)):
                return False, f"mismatch on {t}"
        return True, f"{len(battery)} word-tuple classes (d <= 2, degree <= 8, one and two traces) agree exactly"

    return _timed(3, "GUE engine vs entrywise Wick oracle", 60.0, body)


def criterion_4() -> Result:
    from .gauss import expect_trace_product_goe, expect_trace_product_gue
    from .haar import expect_trace_product_haar_u

    def body():
        x = Poly.x()
        cases = [
            ("E tr X^4 GUE", expect_trace_product_gue([word(1, 1, 1, 1)]), Poly((2, 0, 1))),
            ("E tr X1X2X1X2 GUE", expect_trace_product_gue([word(1, 2, 1, 2)]), x * x),
            ("E tr X^2 GOE", expect_trace_product_goe([word(1, 1)]), Poly((1, 1))),
            # normalised-trace engine: E[Tr U^2 Tr U*^2] = N^2 * engine
            ("E Tr U^2 Tr U*^2", expect_trace_product_haar_u([word(1, 1), word((1, True), (1, True))]).shift(-2), RatFn(2)),
            ("E tr U tr U*", expect_trace_product_haar_u([word(1), word((1, True))]), RatFn(x * x)),
        ]
        bad = [name for name, got, want in cases if got != want]
        if bad:
            return False, "mismatch: " + ", ".join(bad)
        return True, "2 + x^2, x^2, 1 + x, 2, x^2 reproduced exactly"

    return _timed(4, "Known exact values", None, body)


def criterion_5() -> Result:
    from .gauss import expect_trace_product_goe, expect_trace_product_gue
    from .haar import expect_trace_product_haar_u

    def body():
        gb = gue_battery()
        for t in gb:
            p = expect_trace_product_gue(t)
            if any(p[i] for i in range(1, p.degree + 1, 2)):
                return False, f"odd GUE coefficient for {t}"
        hb = haar_battery()
        for t in hb:
            f = expect_trace_product_haar_u(t)
            coeffs = series_expand(f, 12)
            if not f.is_even() or any(coeffs[i] for i in range(1, 12, 2)):
                return False, f"odd Haar coefficient for {t}"
        witness = expect_trace_product_goe([word(1, 1)])
        if witness[1] == 0:
            return False, "GOE witness [x1 x1] has no odd coefficient"
        return True, f"{len(gb)} GUE and {len(hb)} Haar outputs even; GOE [x1 x1] = {witness}"

    return _timed(5, "Evenness", None, body)


def criterion_6() -> Result:
    from .haar import denominator_ok, expect_trace_product_haar_u

    def body():
        hb = haar_battery()
        for t in hb:
            k = sum(len(w) for w in t)
            f = expect_trace_product_haar_u(t)
            if not denominator_ok(f, k):
                return False, f"denominator {f.den} of {t} does not divide the bound for k={k}"
        return True, f"{len(hb)} Haar outputs have denominators dividing N^k prod (N^2 - j^2)^floor(k/j)"

    return _timed(6, "Denominator structure", None, body)


def criterion_7() -> Result:
    from .expand import residual_scan

    def body():
        Ns = list(range(4, 65))
        rep = residual_scan("gue", [_P("x1^4")], 2, Ns)
        for row in rep.residuals:
            if row["residual"] != Fraction(1, row["N"] ** 2):
                return False, f"residual at N={row['N']} is {row['residual']}"
        if abs(rep.slope + 2) > 0.01:
            return False, f"slope {rep.slope}"
        return True, f"residual = 1/N^2 exactly for N = 4..64; slope {rep.slope:.4f}"

    return _timed(7, "Expansion residual rate", 5.0, body)


def semicircle_integral(h: Callable) -> float:
    from scipy.integrate import quad

    val, _ = quad(lambda t: h(t) * math.sqrt(4 - t * t) / (2 * math.pi), -2, 2, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def criterion_8() -> Result:
    from .cheb import parse_testfn
    from .expand import smooth_expansion

    def body():
        rep = smooth_expansion("gue", [_P("x1")], [parse_testfn("exp")], 4)
        oracle = semicircle_integral(math.exp)
        e0 = abs(rep.coefficients[0] - oracle)
        e1 = abs(rep.coefficients[1])
        ok = e0 <= 1e-6 and e1 <= 1e-10
        return ok, f"nu0 = {rep.coefficients[0]:.12f} vs quadrature {oracle:.12f} (err {e0:.1e}); |nu1| = {e1:.1e}"

    return _timed(8, "Smooth pipeline", 30.0, body)


def criterion_9() -> Result:
    from .cumulant import scaled_trace_cumulant_exact

    def body():
        rep = scaled_trace_cumulant_exact("gue", [_P("x1^2")] * 3)
        zeros = [rep.coefficients[l] == 0 for l in range(4)]
        ok = all(zeros) and rep.limit is not None
        return ok, f"coefficients of N^4..N^1 zero: {zeros}; limit {rep.limit}"

    return _timed(9, "Cumulant vanishing", 60.0, body)


def criterion_10(seed: int = 2024) -> Result:
    from .cheb import parse_testfn
    from .cumulant import clt_report

    def body():
        rep = clt_report("gue", [_P("x1")], [parse_testfn("t^2")], 128, 2000, seed=seed)
        c = rep["coordinates"][0]
        checks = [
            abs(c["variance"] - 2) <= 0.2,
            abs(c["skewness"]) < 0.15,
            abs(c["excess_kurtosis"]) < 0.3,
            c["ks_distance"] < 0.05,
        ]
        detail = (
            f"var {c['variance']:.3f} (exact 2), skew {c['skewness']:.3f}, "
            f"excess kurtosis {c['excess_kurtosis']:.3f}, KS {c['ks_distance']:.3f}"
        )
        return all(checks), detail

    return _timed(10, "CLT at desk scale", 180.0, body)


def _exact_for(ensemble: str, polys):
    from .expand import engine_value

    return engine_value(ensemble, polys)


def criterion_11(seed: int = 7, draws: int = 10000, Ns=(6, 8, 16)) -> Result:
    from .sampler import BatchConfig, battery

    def body():
        worst, count = 0.0, 0
        for ens, prods in MC_BATTERY.items():
            polys = [[_P(s) for s in prod] for prod in prods]
            d = max(P.alphabet_size() for prod in polys for P in prod)
            exact = [_exact_for(ens, prod) for prod in polys]
            for N in Ns:
                cfg = BatchConfig(ens, N, d=d, seed=seed + N, draws=draws)
                ests = battery(cfg, polys)
                for prod, f, est in zip(prods, exact, ests):
                    val = float(f(Fraction(1, N)))
                    se = max(est.stderr, 1e-12 * (1 + abs(val)))
                    z = abs(complex(est.mean) - val) / se
                    count += 1
                    if z > worst:
                        worst = z
                    if z > 4:
                        return False, f"{ens} {prod} at N={N}: exact {val:.6g}, sampled {est.mean} +- {est.stderr:.2g} (z={z:.2f})"
        return True, f"{count} comparisons within 4 standard errors (max z {worst:.2f}, {draws} draws each)"

    return _timed(11, "Monte Carlo vs exact", 600.0, body)


def criterion_12(seed: int = 11, draws: int = 4000) -> Result:
    from .sampler import BatchConfig, mc_expect_trace_product

    def body():
        parts = []
        ok = True
        for N in (16, 32):
            est = mc_expect_trace_product(BatchConfig("gse", N, seed=seed + N, draws=draws), [_P("x1^2")])
            target = 1 - 1 / (2 * N)
            z = abs(est.mean - target) / est.stderr
            ok = ok and z <= 4
            parts.append(f"N={N}: {est.mean:.5f} vs {target:.5f} (z={z:.2f})")
        return ok, "; ".join(parts)

    return _timed(12, "GSE duality", None, body)


def criterion_13() -> Result:
    from .cumulant import free_energy_coeffs

    def body():
        Ns = [2, 3, 4, 8, 16, 32, 64]
        table = free_energy_coeffs("gue", [_P("x1^2")], 2, Ns)
        a1, a2 = table[(1,)], table[(2,)]
        ok = all(v == 1 for v in a1["per_N"].values()) and all(v == 1 for v in a2["per_N"].values())
        ok = ok and a1["limit"] == 1 and a2["limit"] == 1
        return ok, f"a1^N = {sorted(set(map(str, a1['per_N'].values())))}, a2^N = {sorted(set(map(str, a2['per_N'].values())))} on N in {Ns}; limits {a1['limit']}, {a2['limit']}"

    return _timed(13, "Matrix-integral coefficients", None, body)


CRITERIA = [
    criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
    criterion_8, criterion_9, criterion_10, criterion_11, criterion_12, criterion_13,
]
SLOW = {10, 11, 12}


def run_all(quick: bool = False, echo: Callable[[str], None] = print) -> List[Result]:
    out = []
    for i, fn in enumerate(CRITERIA, start=1):
        if quick and i in SLOW:
            continue
        res = fn()
        echo(res.line())
        out.append(res)
    return out
