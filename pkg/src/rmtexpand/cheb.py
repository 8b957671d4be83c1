"""Chebyshev series of test functions on [-K, K] and spectral-radius bounds.

Smooth functions are interpolated at Chebyshev-Lobatto nodes (a type-I
cosine transform, i.e. the cosine series of theta -> h(K cos theta)); polynomial
functions are converted exactly.  The test-function registry used by the
command line lives here as well.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as npcheb
from scipy.fft import dct

from .errors import NumericError, SizeError
from .exactalg import as_fraction, real_imag
from .ncpoly import NCPoly, is_selfadjoint, parse_ncpoly, univariate_coefficients

DEFAULT_NODES = 129
MAX_NODES = 1 << 14 | 1
MAX_POLY_DEGREE = 64

GAUSSIAN = ("gue", "goe", "gse")
HAAR = ("haar-u", "haar-o", "haar-sp")


@dataclass(frozen=True)
class ChebSeries:
    """h(t) = sum_j coeffs[j] T_j(t / K) on [-K, K].

    ``exact`` series carry Fraction coefficients and a zero tail; float
    series carry the tail bound of whatever was dropped by ``truncate``.
    """

    K: float
    coeffs: tuple
    tail: Optional[float] = None
    exact: bool = False

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError("K must be positive")
        if not self.exact and not all(math.isfinite(float(c)) for c in self.coeffs):
            raise NumericError("non-finite Chebyshev coefficient")

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(np.abs(t) > float(self.K) * (1 + 1e-12)):
            raise ValueError("Chebyshev series evaluated outside [-K, K]")
        return npcheb.chebval(t / float(self.K), np.asarray(self.coeffs, dtype=float))

    def as_floats(self) -> np.ndarray:
        return np.asarray([float(c) for c in self.coeffs])


def cheb_coeffs(h: Callable, K: float, M: int = DEFAULT_NODES) -> ChebSeries:
    """Degree M-1 Chebyshev interpolant of h on [-K, K].

    M must be 2^p + 1 with M >= 17.
    """
    if M < 17 or M > MAX_NODES or (M - 1) & (M - 2):
        raise ValueError(f"node count must be 2^p + 1 >= 17, got {M}")
    nodes = np.cos(np.pi * np.arange(M) / (M - 1))
    with np.errstate(all="ignore"):  # non-finite samples are rejected below
        y = np.asarray(h(K * nodes), dtype=float)
    if y.shape != nodes.shape:
        y = np.broadcast_to(y, nodes.shape).astype(float)
    if not np.all(np.isfinite(y)):
        raise NumericError("test function is not finite on [-K, K]")
    a = dct(y, type=1) / (M - 1)
    a[0] /= 2
    a[-1] /= 2
    return ChebSeries(float(K), tuple(float(v) for v in a))


def tail_bound(s: ChebSeries, q0: int) -> float:
    """Sum of |a_j| over j > q0 (plus any tail already dropped)."""
    extra = float(s.tail or 0.0)
    return float(sum(abs(float(c)) for c in s.coeffs[q0 + 1 :])) + extra


def truncate(s: ChebSeries, q0: int) -> ChebSeries:
    if q0 > s.degree:
        raise ValueError(f"cannot truncate degree {s.degree} series at {q0}")
    return ChebSeries(s.K, s.coeffs[: q0 + 1], tail=tail_bound(s, q0), exact=s.exact)


def cheb_adaptive(h: Callable, K: float, tol: float = 1e-10, M: int = DEFAULT_NODES) -> ChebSeries:
    """Double the node count until the upper half of the spectrum is below tol."""
    prev = None
    while True:
        s = cheb_coeffs(h, K, M)
        upper = tail_bound(s, (M - 1) // 2)
        if upper < tol or (prev is not None and abs(upper - prev) < tol):
            return s
        if 2 * M - 1 > MAX_NODES:
            return s
        prev = upper
        M = 2 * M - 1


def _power_in_cheb(n: int) -> List[Fraction]:
    # s^n = 2^(1-n) sum_k C(n,k) T_{n-2k}, the T_0 term counted once
    out = [Fraction(0)] * (n + 1)
    if n == 0:
        out[0] = Fraction(1)
        return out
    scale = Fraction(1, 2 ** (n - 1))
    for k in range(n // 2 + 1):
        j = n - 2 * k
        c = math.comb(n, k) * scale
        out[j] += c / 2 if j == 0 else c
    return out


def cheb_of_poly(coeffs: Sequence, K=1) -> ChebSeries:
    """Exact Chebyshev coefficients of sum_n coeffs[n] t^n on [-K, K]."""
    coeffs = [as_fraction(c) for c in coeffs] or [Fraction(0)]
    if len(coeffs) - 1 > MAX_POLY_DEGREE:
        raise SizeError(f"polynomial degree above {MAX_POLY_DEGREE}")
    K = as_fraction(K)
    out = [Fraction(0)] * len(coeffs)
    for n, c in enumerate(coeffs):
        if c:
            for j, v in enumerate(_power_in_cheb(n)):
                out[j] += c * K**n * v
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return ChebSeries(K, tuple(out), tail=0.0, exact=True)


def _cheb_T(j: int) -> List[Fraction]:
    """Monomial coefficients of T_j."""
    prev, cur = [Fraction(1)], [Fraction(0), Fraction(1)]
    if j == 0:
        return prev
    for _ in range(j - 1):
        nxt = [Fraction(0)] + [2 * c for c in cur]
        for i, c in enumerate(prev):
            nxt[i] -= c
        prev, cur = cur, nxt
    return cur


def cheb_basis_poly(j: int, K=1) -> List[Fraction]:
    """Monomial coefficients of t -> T_j(t / K)."""
    K = as_fraction(K)
    return [c / K**n for n, c in enumerate(_cheb_T(j))]


def cheb_to_poly(s: ChebSeries) -> List[Fraction]:
    """Monomial coefficients in t of an exact series (inverse of cheb_of_poly)."""
    out = [Fraction(0)] * len(s.coeffs)
    for j, a in enumerate(s.coeffs):
        if a:
            for n, c in enumerate(cheb_basis_poly(j, s.K)):
                out[n] += as_fraction(a) * c
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def _abs_bound(c) -> Fraction | float:
    if isinstance(c, (float, complex)):
        return abs(c)
    re_, im = real_imag(c)
    return abs(re_) + abs(im)


def spectral_bound(ensemble: str, P: NCPoly):
    """Certified bound on the limiting operator norm of P.

    Free semicirculars have norm 2 and unitaries norm 1; the bound follows
    from the triangle inequality and submultiplicativity.
    """
    ensemble = ensemble.lower()
    if not is_selfadjoint(P, hermitian_letters=ensemble in GAUSSIAN):
        raise ValueError(f"spectral bound needs a self-adjoint polynomial, got {P}")
    if ensemble in GAUSSIAN:
        total = sum((_abs_bound(c) * 2 ** len(w) for w, c in P.items()), Fraction(0))
    elif ensemble in HAAR:
        total = sum((_abs_bound(c) for _, c in P.items()), Fraction(0))
    else:
        raise ValueError(f"unknown ensemble {ensemble!r}")
    if total == 0:
        total = Fraction(1)  # constant zero polynomial: any interval works
    return total


# ---------------------------------------------------------------------------
# test-function registry
# ---------------------------------------------------------------------------


def _gauss_bump(t):
    return np.exp(-np.asarray(t) ** 2)


def _runge(t):
    return 1.0 / (1.0 + 25.0 * np.asarray(t) ** 2)


BUILTINS = {
    "exp": np.exp,
    "sin": np.sin,
    "cos": np.cos,
    "gauss-bump": _gauss_bump,
    "runge": _runge,
}

_SCALED = re.compile(
    r"^\s*(?:(?P<c>[-+]?[\d.]+(?:[eE][-+]?\d+)?)\s*\*\s*)?(?P<name>[a-z][a-z-]*)"
    r"\(\s*(?:(?P<a>[-+]?[\d.]+(?:[eE][-+]?\d+)?)\s*\*\s*)?t\s*\)\s*$"
)


@dataclass(frozen=True)
class TestFunction:
    """Named scalar function; ``poly`` holds exact monomial coefficients when h is a polynomial."""

    __test__ = False  # not a pytest class

    name: str
    fn: Callable = field(compare=False, repr=False)
    poly: Optional[tuple] = None

    def __call__(self, t):
        return self.fn(t)

    @property
    def is_polynomial(self) -> bool:
        return self.poly is not None


def _poly_fn(coeffs):
    fc = [float(c) for c in coeffs]

    def fn(t):
        t = np.asarray(t, dtype=float)
        return np.polynomial.polynomial.polyval(t, fc) + 0 * t

    return fn


def polynomial_testfn(coeffs: Sequence, name: str | None = None) -> TestFunction:
    coeffs = tuple(as_fraction(c) for c in coeffs)
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    return TestFunction(name or "poly:" + ",".join(str(c) for c in coeffs), _poly_fn(coeffs), coeffs)


def parse_testfn(spec: str) -> TestFunction:
    """Resolve a test-function descriptor.

    Accepted forms: a built-in name (``exp``, ``sin``, ``cos``,
    ``gauss-bump``, ``runge``), ``c*name(a*t)`` scaling of a built-in,
    ``poly:c0,c1,...`` monomial coefficients, or a polynomial in ``t`` such
    as ``2*t^2 - 1``.
    """
    spec = spec.strip()
    if spec in BUILTINS:
        return TestFunction(spec, BUILTINS[spec])
    if spec.startswith("poly:"):
        parts = [p for p in spec[5:].split(",") if p.strip()]
        if not parts:
            raise ValueError("empty coefficient list")
        return polynomial_testfn([Fraction(p.strip()) for p in parts], name=spec)
    m = _SCALED.match(spec)
    if m and m.group("name") in BUILTINS:
        base = BUILTINS[m.group("name")]
        c = float(m.group("c")) if m.group("c") else 1.0
        a = float(m.group("a")) if m.group("a") else 1.0
        return TestFunction(spec, lambda t, base=base, c=c, a=a: c * base(a * np.asarray(t)))
    try:
        p = parse_ncpoly(spec, symbol="t")
    except ValueError as exc:
        raise ValueError(f"unknown test function {spec!r}") from exc
    if p.has_star():
        raise ValueError("test function polynomial cannot use adjoints")
    return polynomial_testfn(univariate_coefficients(p), name=spec)
