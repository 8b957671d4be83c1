"""Asymptotic expansion coefficients in 1/N for polynomial and smooth test functions.

For polynomial inputs the coefficients are the exact Maclaurin coefficients
of the engine output.  For smooth inputs each h_i is replaced by a truncated
Chebyshev series in P_i / K_i and the coefficients are assembled
multilinearly from exact engine values of T_j(P_i / K_i).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import cheb
from .errors import EnsembleError, SizeError
from .exactalg import Poly, RatFn, as_fraction, fraction_to_str, series_expand
from .gauss import expect_ncpoly_product_gauss
from .haar import expect_ncpoly_product_haar_u
from .ncpoly import NCPoly, format_ncpoly, substitute

EXACT_ENSEMBLES = ("gue", "goe", "gse", "haar-u")
# total word length per engine call in the smooth paths; for Haar a single
# letter may appear at most 5 times unstarred, so a product stays within 10
LENGTH_CAP = {"gue": 16, "goe": 12, "gse": 12, "haar-u": 10}
DEFAULT_BUDGET = 20000


def normalize_ensemble(name: str) -> str:
    n = name.lower().replace("_", "-")
    aliases = {"haar": "haar-u", "haaru": "haar-u", "u": "haar-u", "haaro": "haar-o", "haarsp": "haar-sp"}
    n = aliases.get(n, n)
    return n


def engine_value(ensemble: str, polys: Sequence[NCPoly]):
    """Exact E[tr P_1 ... tr P_r] as a function of x = 1/N (Poly or RatFn)."""
    ensemble = normalize_ensemble(ensemble)
    if ensemble in ("gue", "goe", "gse"):
        return expect_ncpoly_product_gauss(ensemble, polys)
    if ensemble == "haar-u":
        return expect_ncpoly_product_haar_u(polys)
    raise EnsembleError(f"no exact engine for ensemble {ensemble!r}")


def compose_inputs(Ps: Sequence[NCPoly], hs: Sequence, cap: int | None = None) -> List[NCPoly]:
    """h_i(P_i) for polynomial test functions (monomial coefficient lists or TestFunction)."""
    if len(Ps) != len(hs):
        raise ValueError("need one test function per polynomial")
    out = []
    for P, h in zip(Ps, hs):
        coeffs = h.poly if isinstance(h, cheb.TestFunction) else h
        if coeffs is None:
            raise ValueError(f"{h.name} is not a polynomial test function")
        out.append(substitute(coeffs, P) if cap is None else substitute(coeffs, P, cap=cap))
    return out


def _evaluate(f, x0: Fraction) -> Fraction:
    return f(x0) if isinstance(f, (Poly, RatFn)) else as_fraction(f)


def _json_number(c):
    if isinstance(c, Fraction):
        return fraction_to_str(c)
    return float(c)


@dataclass
class ExpansionReport:
    ensemble: str
    inputs: List[str]
    order: int
    coefficients: list
    exact: bool
    truncation_error: Optional[float] = None
    residuals: List[dict] = field(default_factory=list)
    slope: Optional[float] = None
    function: object = None
    details: dict = field(default_factory=dict)

    def odd_coefficients(self) -> list:
        return [c for k, c in enumerate(self.coefficients) if k % 2]

    def to_json_obj(self) -> dict:
        obj = {
            "ensemble": self.ensemble,
            "inputs": list(self.inputs),
            "order": self.order,
            "mode": "exact" if self.exact else "smooth",
            "coefficients": [_json_number(c) for c in self.coefficients],
            "truncation_error": self.truncation_error,
            "residuals": [
                {"N": r["N"], "residual": _json_number(r["residual"])} for r in self.residuals
            ],
        }
        if self.slope is not None:
            obj["slope"] = self.slope
        if isinstance(self.function, (Poly, RatFn)):
            f = self.function if isinstance(self.function, RatFn) else RatFn.from_poly(self.function)
            obj["exact_function"] = f.to_json_obj()
        if self.details:
            obj["details"] = self.details
        return obj


def exact_expansion(ensemble: str, polys: Sequence[NCPoly], m: int) -> ExpansionReport:
    """First m coefficients of E[tr P_1 ... tr P_r] in powers of 1/N, exactly."""
    ensemble = normalize_ensemble(ensemble)
    if m < 1:
        raise ValueError("order m must be at least 1")
    if ensemble == "gse":
        goe = engine_value("goe", polys)
        coeffs = [c * Fraction(-1, 2) ** k for k, c in enumerate(series_expand(goe, m))]
        f = goe.compose_scale(Fraction(-1, 2))
    else:
        f = engine_value(ensemble, polys)
        coeffs = list(series_expand(f, m))
    return ExpansionReport(
        ensemble=ensemble,
        inputs=[format_ncpoly(p) for p in polys],
        order=m,
        coefficients=coeffs,
        exact=True,
        truncation_error=0.0,
        function=f,
    )


def loglog_slope(Ns: Sequence[int], residuals: Sequence) -> Optional[float]:
    pts = [(math.log(n), math.log(abs(float(r)))) for n, r in zip(Ns, residuals) if r != 0]
    if len(pts) < 2:
        return None
    xs, ys = zip(*pts)
    return float(np.polyfit(xs, ys, 1)[0])


def residual_scan(ensemble: str, polys: Sequence[NCPoly], m: int, Ns: Sequence[int]) -> ExpansionReport:
    """Exact E_N minus the m-term partial sum along a ladder of N."""
    rep = exact_expansion(ensemble, polys, m)
    rows = []
    for N in Ns:
        x0 = Fraction(1, int(N))
        exact_val = _evaluate(rep.function, x0)
        partial = sum((c * x0**k for k, c in enumerate(rep.coefficients)), Fraction(0))
        rows.append({"N": int(N), "residual": exact_val - partial, "value": exact_val})
    rep.residuals = rows
    rep.slope = loglog_slope([r["N"] for r in rows], [r["residual"] for r in rows])
    return rep


# ---------------------------------------------------------------------------
# smooth test functions
# ---------------------------------------------------------------------------


def _select_q(s: cheb.ChebSeries, tol: float, qmax: int) -> int:
    for q in range(0, min(qmax, s.degree) + 1):
        if cheb.tail_bound(s, q) <= tol:
            return q
    return min(qmax, s.degree)


def smooth_expansion(
    ensemble: str,
    Ps: Sequence[NCPoly],
    hs: Sequence[Callable],
    m: int,
    K: Sequence | None = None,
    tol: float = 1e-8,
    nodes: int = cheb.DEFAULT_NODES,
    budget: int = DEFAULT_BUDGET,
) -> ExpansionReport:
    """Expansion coefficients of E[tr h_1(P_1) ... tr h_r(P_r)] for smooth h_i.

    ``K`` overrides the certified spectral bounds.  The reported
    truncation error is the dropped Chebyshev mass times the largest
    engine coefficient seen (at least 1).
    """
    ensemble = normalize_ensemble(ensemble)
    r = len(Ps)
    if r != len(hs):
        raise ValueError("need one test function per polynomial")
    if not 1 <= r <= 3:
        raise SizeError("smooth expansion supports 1 <= r <= 3")
    cap = LENGTH_CAP[ensemble] if ensemble in LENGTH_CAP else None
    if cap is None:
        raise EnsembleError(f"no exact engine for ensemble {ensemble!r}")
    Ks = [as_fraction(k) for k in K] if K is not None else [cheb.spectral_bound(ensemble, P) for P in Ps]
    series = [cheb.cheb_adaptive(h, float(k), tol=min(tol, 1e-10) / 10, M=nodes) for h, k in zip(hs, Ks)]
    degs = [max(P.degree, 1) for P in Ps]
    qmax = [cap // (r * d) for d in degs]

    basis_cache: Dict[tuple, NCPoly] = {}

    def basis(i: int, j: int) -> NCPoly:
        key = (i, j)
        if key not in basis_cache:
            basis_cache[key] = substitute(cheb.cheb_basis_poly(j, Ks[i]), Ps[i], cap=cap)
        return basis_cache[key]

    table: Dict[tuple, List[Fraction]] = {}

    def nu(idx: tuple) -> List[Fraction]:
        if idx not in table:
            f = engine_value("goe" if ensemble == "gse" else ensemble, [basis(i, j) for i, j in enumerate(idx)])
            c = list(series_expand(f, m))
            if ensemble == "gse":
                c = [v * Fraction(-1, 2) ** k for k, v in enumerate(c)]
            table[idx] = c
        return table[idx]

    def assemble(qs):
        calls = math.prod(q + 1 for q in qs)
        if calls > budget:
            raise SizeError(f"truncation degrees {qs} need {calls} engine calls, budget {budget}")
        acc = np.zeros(m)
        growth = 1.0
        for idx in itertools.product(*[range(q + 1) for q in qs]):
            w = math.prod(series[i].coeffs[j] for i, j in enumerate(idx))
            vals = nu(idx)
            growth = max(growth, max((abs(float(v)) for v in vals), default=0.0))
            if w:
                acc += w * np.asarray([float(v) for v in vals])
        full = math.prod(cheb.tail_bound(s, -1) for s in series)
        kept = math.prod(cheb.tail_bound(s, -1) - cheb.tail_bound(s, q) for s, q in zip(series, qs))
        return acc, max(full - kept, 0.0) * growth, growth

    qs = [_select_q(s, tol, qm) for s, qm in zip(series, qmax)]
    coeffs, err, growth = assemble(qs)
    while err > tol:
        # engine growth makes the plain tail optimistic; tighten and retry
        new_qs = [_select_q(s, tol / (growth * r), qm) for s, qm in zip(series, qmax)]
        new_qs = [max(a, b) for a, b in zip(new_qs, qs)]
        if new_qs == qs:
            if not all(q < qm for q, qm in zip(qs, qmax)):
                break
            new_qs = [min(q + 1, qm) for q, qm in zip(qs, qmax)]
            if new_qs == qs:
                break
        qs = new_qs
        coeffs, err, growth = assemble(qs)

    names = [getattr(h, "name", getattr(h, "__name__", "h")) for h in hs]
    return ExpansionReport(
        ensemble=ensemble,
        inputs=[f"{n}({format_ncpoly(P)})" for n, P in zip(names, Ps)],
        order=m,
        coefficients=[float(c) for c in coeffs],
        exact=False,
        truncation_error=float(err),
        details={
            "K": [fraction_to_str(k) for k in Ks],
            "q": qs,
            "engine_calls": len(table),
            "growth": growth,
        },
    )
