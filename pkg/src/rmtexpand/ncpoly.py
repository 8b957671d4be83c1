"""Non-commutative words and polynomials in x_1..x_d and their adjoints.

Text syntax::

    2*x1*x2^2 + x1'          # ' is the adjoint of the preceding factor
    3/2*u1*u2' - i*u2*u1'    # i is the imaginary unit
    (x1 + x2)^2              # parentheses and integer powers

Letters are a lowercase name followed by an optional index (``x1``, ``u3``,
``t``); one polynomial uses a single letter name.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, Iterable, Mapping, NamedTuple, Sequence, Tuple

from .errors import SizeError
from .exactalg import ComplexRational, as_fraction, conj, fraction_to_str, simplify_scalar

DEFAULT_WORD_CAP = 12


class Letter(NamedTuple):
    index: int
    starred: bool = False

    def adjoint(self) -> "Letter":
        return Letter(self.index, not self.starred)


Word = Tuple[Letter, ...]

EXACT = "exact"
FLOAT = "float"


def word(*spec) -> Word:
    """Build a word from ints (plain letters) or (index, starred) pairs.

    ``word(1, 2, (1, True))`` is x1 x2 x1*.
    """
    out = []
    for s in spec:
        if isinstance(s, Letter):
            out.append(s)
        elif isinstance(s, int):
            out.append(Letter(s, False))
        else:
            out.append(Letter(int(s[0]), bool(s[1])))
    return tuple(out)


def word_adjoint(w: Word) -> Word:
    return tuple(l.adjoint() for l in reversed(w))


def _domain_of(c) -> str:
    if isinstance(c, (float, complex)):
        return FLOAT
    return EXACT


def _normalize_coeff(c, domain: str):
    if domain == FLOAT:
        c = complex(c)
        return c.real if c.imag == 0 else c
    if isinstance(c, complex):
        raise TypeError("float coefficient passed to an exact-domain polynomial")
    if isinstance(c, ComplexRational):
        return simplify_scalar(c)
    return as_fraction(c)


class NCPoly:
    """Element of the free algebra, stored as {word: coefficient}.

    Immutable.  ``domain`` is ``"exact"`` (Fraction / ComplexRational
    coefficients) or ``"float"`` (float / complex).
    """

    __slots__ = ("terms", "domain", "symbol", "_hash")

    def __init__(self, terms: Mapping | Iterable = (), domain: str | None = None, symbol: str = "x"):
        items = terms.items() if isinstance(terms, Mapping) else terms
        items = [(tuple(w), c) for w, c in items]
        if domain is None:
            domain = FLOAT if any(_domain_of(c) == FLOAT for _, c in items) else EXACT
        acc: Dict[Word, object] = {}
        for w, c in items:
            c = _normalize_coeff(c, domain)
            acc[w] = acc[w] + c if w in acc else c
        self.terms = {w: c for w, c in acc.items() if c != 0}
        self.domain = domain
        self.symbol = symbol
        self._hash = None

    # constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c=1, symbol: str = "x") -> "NCPoly":
        return cls({(): c}, symbol=symbol)

    @classmethod
    def letter(cls, index: int, starred: bool = False, symbol: str = "x") -> "NCPoly":
        return cls({(Letter(index, starred),): 1}, symbol=symbol)

    @classmethod
    def from_word(cls, w: Word, c=1, symbol: str = "x") -> "NCPoly":
        return cls({tuple(w): c}, symbol=symbol)

    # properties -------------------------------------------------------
    @property
    def degree(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def alphabet_size(self) -> int:
        return max((l.index for w in self.terms for l in w), default=0)

    def has_star(self) -> bool:
        return any(l.starred for w in self.terms for l in w)

    def is_zero(self) -> bool:
        return not self.terms

    def items(self):
        return self.terms.items()

    def constant_term(self):
        return self.terms.get((), 0)

    # arithmetic -------------------------------------------------------
    def _coerce(self, o) -> "NCPoly":
        if isinstance(o, NCPoly):
            if o.domain != self.domain and not o.is_zero() and not self.is_zero():
                raise ValueError(f"coefficient domains differ: {self.domain} vs {o.domain}")
            return o
        return NCPoly({(): o}, domain=self.domain, symbol=self.symbol)

    def _result_domain(self, o: "NCPoly") -> str:
        if self.is_zero():
            return o.domain
        return self.domain

    def __add__(self, o):
        o = self._coerce(o)
        terms = dict(self.terms)
        for w, c in o.terms.items():
            terms[w] = terms[w] + c if w in terms else c
        return NCPoly(terms, domain=self._result_domain(o), symbol=self.symbol)

    __radd__ = __add__

    def __neg__(self):
        return NCPoly({w: -c for w, c in self.terms.items()}, domain=self.domain, symbol=self.symbol)

    def __sub__(self, o):
        return self + (-self._coerce(o))

    def __rsub__(self, o):
        return self._coerce(o) - self

    def __mul__(self, o):
        if not isinstance(o, NCPoly):
            return self.scale(o)
        o = self._coerce(o)
        terms: Dict[Word, object] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in o.terms.items():
                w = w1 + w2
                c = c1 * c2
                terms[w] = terms[w] + c if w in terms else c
        return NCPoly(terms, domain=self._result_domain(o), symbol=self.symbol)

    def __rmul__(self, o):
        return self.scale(o)

    def scale(self, c) -> "NCPoly":
        return NCPoly({w: c * v for w, v in self.terms.items()}, domain=self.domain, symbol=self.symbol)

    def __pow__(self, n: int):
        return nc_pow(self, n)

    def __eq__(self, o):
        if not isinstance(o, NCPoly):
            o = NCPoly.constant(o) if o != 0 else NCPoly()
        return self.terms == o.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    def __repr__(self):
        return f"NCPoly({format_ncpoly(self)!r})"

    def __str__(self):
        return format_ncpoly(self)


def nc_add(p: NCPoly, q: NCPoly) -> NCPoly:
    return p + q


def nc_mul(p: NCPoly, q: NCPoly) -> NCPoly:
    return p * q


def nc_pow(p: NCPoly, n: int) -> NCPoly:
    if n < 0:
        raise ValueError("negative power")
    out = NCPoly.constant(1, symbol=p.symbol)
    if p.domain == FLOAT:
        out = NCPoly({(): 1.0}, domain=FLOAT, symbol=p.symbol)
    for _ in range(n):
        out = out * p
    return out


def substitute(h: Sequence, P: NCPoly, cap: int = DEFAULT_WORD_CAP) -> NCPoly:
    """h(P) for h given by monomial coefficients h[0] + h[1] t + ...

    Horner evaluation in the free algebra, so only the powers actually
    needed are formed.
    """
    h = list(h)
    while h and h[-1] == 0:
        h.pop()
    deg_h = len(h) - 1
    if deg_h > 0 and deg_h * P.degree > cap:
        raise SizeError(
            f"deg(h)*deg(P) = {deg_h}*{P.degree} exceeds the word-length cap {cap}"
        )
    if not h:
        return NCPoly(domain=P.domain, symbol=P.symbol)
    acc = NCPoly({(): h[-1]}, domain=P.domain, symbol=P.symbol)
    for c in reversed(h[:-1]):
        acc = acc * P + NCPoly({(): c}, domain=P.domain, symbol=P.symbol)
    return acc


def adjoint(p: NCPoly) -> NCPoly:
    return NCPoly({word_adjoint(w): conj(c) for w, c in p.terms.items()}, domain=p.domain, symbol=p.symbol)


def strip_stars(p: NCPoly) -> NCPoly:
    """Identify x_l* with x_l, as for Hermitian letters."""
    terms: Dict[Word, object] = {}
    for w, c in p.terms.items():
        r = tuple(Letter(l.index, False) for l in w)
        terms[r] = terms[r] + c if r in terms else c
    return NCPoly(terms, domain=p.domain, symbol=p.symbol)


def is_selfadjoint(p: NCPoly, hermitian_letters: bool = False) -> bool:
    """adjoint(p) == p; with ``hermitian_letters`` every letter is its own adjoint."""
    if hermitian_letters:
        q = strip_stars(p)
        return strip_stars(adjoint(q)) == q
    return adjoint(p) == p


def reduce_unitary_words(p: NCPoly) -> NCPoly:
    """Cancel adjacent u u* and u* u pairs in every word."""
    terms: Dict[Word, object] = {}
    for w, c in p.terms.items():
        stack = []
        for l in w:
            if stack and stack[-1].index == l.index and stack[-1].starred != l.starred:
                stack.pop()
            else:
                stack.append(l)
        r = tuple(stack)
        terms[r] = terms[r] + c if r in terms else c
    return NCPoly(terms, domain=p.domain, symbol=p.symbol)


def univariate_coefficients(p: NCPoly) -> list:
    """Monomial coefficients of a polynomial in the single letter t (or x1)."""
    out: Dict[int, object] = {}
    for w, c in p.terms.items():
        if any(l.index != 1 or l.starred for l in w):
            raise ValueError(f"not a univariate polynomial: {format_ncpoly(p)}")
        out[len(w)] = c
    deg = max(out, default=-1)
    return [out.get(i, 0) for i in range(deg + 1)]


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------


def _format_letter(l: Letter, symbol: str, indexed: bool) -> str:
    s = f"{symbol}{l.index}" if indexed else symbol
    return s + ("'" if l.starred else "")


def format_word(w: Word, symbol: str = "x", indexed: bool = True) -> str:
    if not w:
        return "1"
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        s = _format_letter(w[i], symbol, indexed)
        parts.append(s if j - i == 1 else f"{s}^{j - i}")
        i = j
    return "*".join(parts)


def _format_coeff(c) -> Tuple[str, str]:
    """(sign, magnitude string); magnitude '' means unit coefficient."""
    if isinstance(c, ComplexRational):
        re_, im = c.re, c.im
        if re_ == 0:
            sign = "-" if im < 0 else "+"
            m = fraction_to_str(abs(im))
            return sign, ("i" if m == "1" else f"{m}*i")
        return "+", f"({fraction_to_str(re_)}{'+' if im > 0 else '-'}{fraction_to_str(abs(im))}*i)"
    if isinstance(c, complex):
        if c.real == 0:
            sign = "-" if c.imag < 0 else "+"
            return sign, f"{repr(abs(c.imag))}*i"
        return "+", f"({repr(c.real)}{'+' if c.imag >= 0 else '-'}{repr(abs(c.imag))}*i)"
    if isinstance(c, float):
        return ("-" if c < 0 else "+"), repr(abs(c))
    c = as_fraction(c)
    m = fraction_to_str(abs(c))
    return ("-" if c < 0 else "+"), ("" if m == "1" else m)


def _word_key(w: Word):
    return (len(w), tuple((l.index, l.starred) for l in w))


def format_ncpoly(p: NCPoly) -> str:
    if p.is_zero():
        return "0"
    indexed = True
    pieces = []
    for w in sorted(p.terms, key=_word_key):
        sign, mag = _format_coeff(p.terms[w])
        ws = format_word(w, p.symbol, indexed) if w else ""
        if not ws:
            body = mag or "1"
        elif not mag:
            body = ws
        else:
            body = f"{mag}*{ws}"
        pieces.append((sign, body))
    s = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
    for sign, body in pieces[1:]:
        s += f" {sign} {body}"
    return s


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[a-z]+)(?P<idx>\d*)|(?P<op>[-+*/^()']))"
)


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                raise ValueError(f"cannot parse polynomial near {text[pos:]!r}")
            pos = m.end()
            if m.group("num") is not None:
                self.tokens.append(("num", m.group("num")))
            elif m.group("name") is not None:
                self.tokens.append(("name", (m.group("name"), m.group("idx"))))
            else:
                self.tokens.append(("op", m.group("op")))
        self.i = 0
        self.symbol = None
        self.float_mode = False

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, op):
        t = self.take()
        if t != ("op", op):
            raise ValueError(f"expected {op!r} in {self.text!r}")

    def parse(self) -> NCPoly:
        if not self.tokens:
            raise ValueError("empty polynomial")
        p = self.expr()
        if self.i != len(self.tokens):
            raise ValueError(f"trailing input in {self.text!r}")
        return p

    def expr(self) -> NCPoly:
        sign = 1
        t = self.peek()
        if t == ("op", "-"):
            self.take()
            sign = -1
        elif t == ("op", "+"):
            self.take()
        acc = self.term() if sign > 0 else -self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            t = self.term()
            acc = acc + t if op == "+" else acc - t
        return acc

    def term(self) -> NCPoly:
        acc = self.factor()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            if op == "*":
                acc = acc * self.factor()
            else:
                den = self.factor()
                if any(w for w in den.terms) or den.is_zero():
                    raise ValueError("division only by nonzero scalars")
                c = den.constant_term()
                acc = acc.scale(1 / c) if not isinstance(c, ComplexRational) else acc.scale(
                    ComplexRational(1) / c
                )
        return acc

    def factor(self) -> NCPoly:
        base = self.atom()
        while True:
            t = self.peek()
            if t == ("op", "'"):
                self.take()
                base = adjoint(base)
            elif t == ("op", "^"):
                self.take()
                kind, val = self.take()
                if kind != "num" or not val.isdigit():
                    raise ValueError("exponent must be a non-negative integer")
                base = nc_pow(base, int(val))
            else:
                return base

    def _sym(self, name: str) -> str:
        if self.symbol is None:
            self.symbol = name
        elif self.symbol != name:
            raise ValueError(f"mixed letter names {self.symbol!r} and {name!r}")
        return name

    def atom(self) -> NCPoly:
        kind, val = self.take()
        if kind == "num":
            if any(ch in val for ch in ".eE"):
                c = Fraction(val)  # decimal literals stay exact
            else:
                c = Fraction(int(val))
            return NCPoly({(): c})
        if kind == "name":
            name, idx = val
            if name == "i" and not idx:
                return NCPoly({(): ComplexRational(0, 1)})
            self._sym(name)
            return NCPoly.letter(int(idx) if idx else 1)
        if (kind, val) == ("op", "("):
            p = self.expr()
            self.expect(")")
            return p
        raise ValueError(f"unexpected token {val!r} in {self.text!r}")


def parse_ncpoly(text: str, symbol: str | None = None) -> NCPoly:
    """Parse the text syntax described in the module docstring."""
    parser = _Parser(text)
    p = parser.parse()
    sym = parser.symbol or symbol or "x"
    if symbol is not None and parser.symbol is not None and parser.symbol != symbol:
        raise ValueError(f"expected letters named {symbol!r}, got {parser.symbol!r}")
    return NCPoly(p.terms, domain=p.domain, symbol=sym)
