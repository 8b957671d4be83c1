"""Exact univariate polynomials and rational functions over Q.

The formal variable downstream of the moment engines is x = 1/N.  The
Weingarten code builds intermediate objects in N and converts them with
``reverse_variable`` at its output.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Tuple, Union

from .errors import PoleError, SizeError

Scalar = Union[int, Fraction]


def as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, Rational)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    raise TypeError(f"exact arithmetic only accepts rationals, got {type(v).__name__}")


def fraction_to_str(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


# ---------------------------------------------------------------------------
# Gaussian rationals (exact complex coefficients of nc polynomials)
# ---------------------------------------------------------------------------


class ComplexRational:
    """a + b i with a, b in Q."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = as_fraction(re)
        self.im = as_fraction(im)

    @staticmethod
    def _lift(v) -> "ComplexRational":
        if isinstance(v, ComplexRational):
            return v
        return ComplexRational(as_fraction(v), 0)

    def __add__(self, o):
        try:
            o = self._lift(o)
        except TypeError:
            return NotImplemented
        return ComplexRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexRational(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        try:
            o = self._lift(o)
        except TypeError:
            return NotImplemented
        return ComplexRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        d = o.re * o.re + o.im * o.im
        if d == 0:
            raise ZeroDivisionError("complex rational division by zero")
        return self * ComplexRational(o.re / d, -o.im / d)

    def conjugate(self):
        return ComplexRational(self.re, -self.im)

    def __eq__(self, o):
        try:
            o = self._lift(o)
        except TypeError:
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __abs__(self):
        return abs(complex(self))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ComplexRational({self.re}, {self.im})"


def simplify_scalar(v):
    """Demote a ComplexRational with zero imaginary part to a Fraction."""
    if isinstance(v, ComplexRational):
        return v.re if v.im == 0 else v
    return as_fraction(v)


def real_imag(v) -> Tuple[Fraction, Fraction]:
    if isinstance(v, ComplexRational):
        return v.re, v.im
    return as_fraction(v), Fraction(0)


def conj(v):
    if isinstance(v, ComplexRational):
        return v.conjugate()
    if isinstance(v, complex):
        return v.conjugate()
    return v


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------


def _trim(coeffs) -> Tuple[Fraction, ...]:
    c = list(coeffs)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class Poly:
    """Univariate polynomial with exact rational coefficients, low degree first."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        self.coeffs = _trim(as_fraction(c) for c in coeffs)

    # construction -----------------------------------------------------
    @classmethod
    def constant(cls, c) -> "Poly":
        return cls((c,))

    @classmethod
    def monomial(cls, degree: int, c=1) -> "Poly":
        return cls([0] * degree + [c])

    @classmethod
    def x(cls) -> "Poly":
        return cls((0, 1))

    # properties -------------------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def valuation(self) -> int:
        """Lowest power with a nonzero coefficient; -1 for the zero polynomial."""
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return -1

    def __getitem__(self, i: int) -> Fraction:
        return self.coeffs[i] if 0 <= i < len(self.coeffs) else Fraction(0)

    def lead(self) -> Fraction:
        return self.coeffs[-1]

    # arithmetic -------------------------------------------------------
    def _coerce(self, o) -> "Poly":
        if isinstance(o, Poly):
            return o
        return Poly.constant(as_fraction(o))

    def __add__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        n = max(len(self.coeffs), len(o.coeffs))
        return Poly(self[i] + o[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-c for c in self.coeffs)

    def __sub__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return Poly()
        out = [Fraction(0)] * (len(self.coeffs) + len(o.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    out[i + j] += a * b
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result, base = Poly.constant(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Poly":
        c = as_fraction(c)
        return Poly(c * a for a in self.coeffs)

    def shift(self, k: int) -> "Poly":
        """Multiply by x^k (k >= 0) or divide exactly by x^-k (k < 0)."""
        if k >= 0:
            return Poly([0] * k + list(self.coeffs))
        if self.is_zero():
            return self
        if self.valuation() < -k:
            raise ValueError("shift would leave a negative power")
        return Poly(self.coeffs[-k:])

    def divmod(self, d: "Poly") -> Tuple["Poly", "Poly"]:
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.coeffs)
        q = [Fraction(0)] * max(len(rem) - len(d.coeffs) + 1, 0)
        lead = d.lead()
        dd = d.degree
        for i in range(len(q) - 1, -1, -1):
            c = rem[i + dd] / lead
            q[i] = c
            if c:
                for j, b in enumerate(d.coeffs):
                    rem[i + j] -= c * b
        return Poly(q), Poly(rem[:dd] if dd > 0 else [])

    def __floordiv__(self, d):
        return self.divmod(d)[0]

    def __mod__(self, d):
        return self.divmod(d)[1]

    def monic(self) -> "Poly":
        if self.is_zero():
            return self
        return self.scale(1 / self.lead())

    def compose_scale(self, c) -> "Poly":
        """p(c x)."""
        c = as_fraction(c)
        return Poly(a * c**i for i, a in enumerate(self.coeffs))

    def reverse(self, degree: int | None = None) -> "Poly":
        """x^degree p(1/x); degree defaults to deg p."""
        if degree is None:
            degree = self.degree
        if self.degree > degree:
            raise ValueError("reverse degree below polynomial degree")
        padded = list(self.coeffs) + [Fraction(0)] * (degree + 1 - len(self.coeffs))
        return Poly(reversed(padded))

    def is_even(self) -> bool:
        return all(c == 0 for c in self.coeffs[1::2])

    def __call__(self, x0):
        return poly_eval(self, x0)

    # comparison / display ---------------------------------------------
    def __eq__(self, o):
        if isinstance(o, Poly):
            return self.coeffs == o.coeffs
        if isinstance(o, RatFn):
            return o == self
        try:
            return self.coeffs == Poly.constant(as_fraction(o)).coeffs
        except TypeError:
            return NotImplemented

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Poly([{', '.join(fraction_to_str(c) for c in self.coeffs)}])"

    def __str__(self):
        return format_poly(self)

    def to_strings(self) -> list:
        return [fraction_to_str(c) for c in self.coeffs] or ["0"]


def format_poly(p: Poly, var: str = "x") -> str:
    if p.is_zero():
        return "0"
    terms = []
    for i, c in enumerate(p.coeffs):
        if not c:
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        cs = fraction_to_str(abs(c))
        body = cs if not mono else (mono if cs == "1" else f"{cs}*{mono}")
        terms.append(("-" if c < 0 else "+", body))
    s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        s += f" {sign} {body}"
    return s


def poly_add(p: Poly, q: Poly) -> Poly:
    return p + q


def poly_mul(p: Poly, q: Poly) -> Poly:
    return p * q


def poly_eval(p: Poly, x0) -> Fraction:
    """Exact Horner evaluation at a rational point."""
    x0 = as_fraction(x0)
    acc = Fraction(0)
    for c in reversed(p.coeffs):
        acc = acc * x0 + c
    return acc


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd (zero if both are zero)."""
    a, b = a.monic(), b.monic()
    while not b.is_zero():
        a, b = b, (a % b).monic()
    return a.monic()


def divides(den: Poly, candidate: Poly) -> bool:
    """True iff candidate = den * h for some polynomial h."""
    if den.is_zero():
        return candidate.is_zero()
    return (candidate % den).is_zero()


@lru_cache(maxsize=None)
def g_poly(q: int) -> Poly:
    """prod_{j=1}^q (1 - (j x)^2)^floor(q/j)."""
    if not 1 <= q <= 30:
        raise SizeError(f"g_poly needs 1 <= q <= 30, got {q}")
    out = Poly.constant(1)
    for j in range(1, q + 1):
        out = out * Poly((1, 0, -(j * j))) ** (q // j)
    return out


# ---------------------------------------------------------------------------
# rational functions
# ---------------------------------------------------------------------------


class RatFn:
    """Reduced quotient num/den of polynomials.

    Normalisation: gcd(num, den) = 1 and the lowest-order nonzero
    coefficient of ``den`` equals 1.  The zero function is 0/1.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, *, reduce: bool = True):
        num = num if isinstance(num, Poly) else Poly.constant(as_fraction(num))
        if den is None:
            den = Poly.constant(1)
        elif not isinstance(den, Poly):
            den = Poly.constant(as_fraction(den))
        if den.is_zero():
            raise ZeroDivisionError("rational function with zero denominator")
        if reduce:
            num, den = _reduce(num, den)
        self.num, self.den = num, den

    @classmethod
    def from_poly(cls, p: Poly) -> "RatFn":
        return cls(p, Poly.constant(1), reduce=False)

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_polynomial(self) -> bool:
        return self.den.degree == 0

    def _coerce(self, o) -> "RatFn":
        if isinstance(o, RatFn):
            return o
        if isinstance(o, Poly):
            return RatFn.from_poly(o)
        return RatFn(Poly.constant(as_fraction(o)))

    def __add__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        if self.den == o.den:
            return RatFn(self.num + o.num, self.den)
        g = poly_gcd(self.den, o.den)
        a = self.den // g
        b = o.den // g
        return RatFn(self.num * b + o.num * a, a * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFn(-self.num, self.den, reduce=False)

    def __sub__(self, o):
        return self + (-self._coerce(o))

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        if self.is_zero() or o.is_zero():
            return RatFn(Poly())
        g1 = poly_gcd(self.num, o.den)
        g2 = poly_gcd(o.num, self.den)
        return RatFn((self.num // g1) * (o.num // g2), (self.den // g2) * (o.den // g1))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._coerce(o)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return self * RatFn(o.den, o.num)

    def __pow__(self, n: int):
        if n < 0:
            return RatFn(self.den, self.num) ** (-n)
        return RatFn(self.num**n, self.den**n)

    def scale(self, c) -> "RatFn":
        return RatFn(self.num.scale(c), self.den)

    def shift(self, k: int) -> "RatFn":
        """Multiply by x^k for any integer k."""
        if k >= 0:
            return RatFn(self.num.shift(k), self.den)
        return RatFn(self.num, self.den.shift(-k))

    def compose_scale(self, c) -> "RatFn":
        """r(c x)."""
        return RatFn(self.num.compose_scale(c), self.den.compose_scale(c))

    def is_even(self) -> bool:
        return self == self.compose_scale(-1)

    def __call__(self, x0):
        return ratfn_eval(self, x0)

    def __eq__(self, o):
        try:
            o = self._coerce(o)
        except TypeError:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        return f"RatFn({self.num!r}, {self.den!r})"

    def __str__(self):
        if self.is_polynomial():
            return format_poly(self.num)
        return f"({format_poly(self.num)})/({format_poly(self.den)})"

    # serialisation ----------------------------------------------------
    def to_json_obj(self) -> dict:
        return {"num": self.num.to_strings(), "den": self.den.to_strings()}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "RatFn":
        return cls(Poly(Fraction(s) for s in obj["num"]), Poly(Fraction(s) for s in obj["den"]))


def _reduce(num: Poly, den: Poly) -> Tuple[Poly, Poly]:
    if num.is_zero():
        return Poly(), Poly.constant(1)
    g = poly_gcd(num, den)
    if g.degree > 0:
        num, den = num // g, den // g
    low = den[den.valuation()]
    if low != 1:
        num, den = num.scale(1 / low), den.scale(1 / low)
    return num, den


def ratfn_normalize(num: Poly, den: Poly) -> RatFn:
    return RatFn(num, den)


def ratfn_eval(r: RatFn, x0) -> Fraction:
    d = poly_eval(r.den, x0)
    if d == 0:
        raise PoleError(f"denominator vanishes at x = {x0}")
    return poly_eval(r.num, x0) / d


def reverse_variable(r: RatFn) -> RatFn:
    """Rewrite r(N) as a rational function of x = 1/N."""
    dn, dd = r.num.degree, r.den.degree
    if r.is_zero():
        return RatFn(Poly())
    num = r.num.reverse()
    den = r.den.reverse()
    # r(1/x) = x^{-dn} rev(num) / (x^{-dd} rev(den))
    shift = dd - dn
    if shift >= 0:
        return RatFn(num.shift(shift), den)
    return RatFn(num, den.shift(-shift))


# ---------------------------------------------------------------------------
# power series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerSeries:
    """First ``order`` Maclaurin coefficients c_0, ..., c_{order-1}."""

    coefficients: Tuple[Fraction, ...]

    @property
    def order(self) -> int:
        return len(self.coefficients)

    def __getitem__(self, i):
        return self.coefficients[i]

    def __iter__(self):
        return iter(self.coefficients)

    def __len__(self):
        return len(self.coefficients)

    def partial_sum(self, x0, terms: int | None = None) -> Fraction:
        terms = self.order if terms is None else terms
        x0 = as_fraction(x0)
        return sum((c * x0**i for i, c in enumerate(self.coefficients[:terms])), Fraction(0))

    def as_poly(self) -> Poly:
        return Poly(self.coefficients)


def series_expand(r, m: int) -> PowerSeries:
    """Exact Maclaurin coefficients of r up to x^(m-1)."""
    if isinstance(r, Poly):
        return PowerSeries(tuple(r[i] for i in range(m)))
    d0 = r.den[0]
    if d0 == 0:
        raise PoleError("rational function has a pole at x = 0")
    out = []
    for n in range(m):
        acc = r.num[n]
        for j in range(1, min(n, r.den.degree) + 1):
            acc -= r.den[j] * out[n - j]
        out.append(acc / d0)
    return PowerSeries(tuple(out))


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------


def to_json(obj) -> str:
    if isinstance(obj, Poly):
        obj = RatFn.from_poly(obj)
    return json.dumps(obj.to_json_obj(), separators=(",", ":"))


def from_json(text: str) -> RatFn:
    return RatFn.from_json_obj(json.loads(text))
