"""Classical cumulants of trace statistics: exact, sampled, and matrix-integral coefficients.

Normalisation bookkeeping lives in ``scale_cumulant``: since N Tr = N^2 tr,
the scaled quantity N^-2 C_r(N Tr Y_1, ..., N Tr Y_r) equals
N^(2r-2) C_r(tr Y_1, ..., tr Y_r), and in the variable x = 1/N that is
x^-(2r-2) times the normalised-trace cumulant.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .combinat import moebius, one_partition, set_partitions, leq
from .errors import EnsembleError, SizeError
from .exactalg import Poly, RatFn, as_fraction, fraction_to_str, series_expand
from .expand import DEFAULT_BUDGET, LENGTH_CAP, _select_q, engine_value, exact_expansion, normalize_ensemble
from .ncpoly import NCPoly, format_ncpoly, substitute
from . import cheb
from . import sampler as smp

MAX_R = 6


class MomentOracle:
    """Joint moments E[prod_{i in B} Y_i] indexed by sorted index tuples B."""

    def __init__(self, r: int, fn: Callable[[Tuple[int, ...]], object] | None = None, values: Dict | None = None):
        self.r = r
        self._fn = fn
        self._values: Dict[Tuple[int, ...], object] = dict(values or {})
        self._values.setdefault((), 1)

    def __call__(self, block) -> object:
        key = tuple(sorted(block))
        if key not in self._values:
            if self._fn is None:
                raise ValueError(f"no moment available for block {key}")
            self._values[key] = self._fn(key)
        return self._values[key]

    def partitioned(self, pi) -> object:
        """E_pi = product over blocks of pi (blocks are 1-based, indices 0-based)."""
        out = 1
        for b in pi.blocks:
            out = out * self(tuple(i - 1 for i in b))
        return out


def exact_oracle(ensemble: str, polys: Sequence[NCPoly]) -> MomentOracle:
    ensemble = normalize_ensemble(ensemble)
    return MomentOracle(len(polys), lambda B: engine_value(ensemble, [polys[i] for i in B]))


def cumulant_from_moments(oracle: MomentOracle, pi=None):
    """C_pi = sum over pi' <= pi of E_pi' Moeb(pi', pi); pi defaults to the one-block partition."""
    r = oracle.r
    if r > MAX_R:
        raise SizeError(f"cumulants need r <= {MAX_R}")
    if r == 0:
        return 1
    top = one_partition(r) if pi is None else pi
    total = 0
    for p in set_partitions(r):
        if leq(p, top):
            mu = moebius(p, top)
            if mu:
                total = total + oracle.partitioned(p) * mu
    return total


def moments_from_cumulants(cumulant_of_block: Callable[[Tuple[int, ...]], object], r: int, pi=None):
    """E_pi = sum over pi' <= pi of prod of block cumulants."""
    top = one_partition(r) if pi is None else pi
    total = 0
    for p in set_partitions(r):
        if leq(p, top):
            term = 1
            for b in p.blocks:
                term = term * cumulant_of_block(tuple(i - 1 for i in b))
            total = total + term
    return total


def scale_cumulant(c, r: int):
    """N^-2 C_r(N Tr ...) from the normalised-trace cumulant c(x): multiply by x^-(2r-2)."""
    return c, 2 * r - 2


@dataclass
class CumulantReport:
    r: int
    mode: str
    ensemble: str
    inputs: List[str]
    coefficients: list = field(default_factory=list)  # c_l multiplies N^(2r-2-l)
    limit: object = None
    vanishing_checked: List[int] = field(default_factory=list)
    vanishing_ok: Optional[bool] = None
    exact_function: object = None
    per_N: List[dict] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        def num(v):
            if isinstance(v, Fraction):
                return fraction_to_str(v)
            if isinstance(v, complex):
                return [v.real, v.imag]
            return None if v is None else float(v)

        obj = {
            "r": self.r,
            "mode": self.mode,
            "ensemble": self.ensemble,
            "inputs": list(self.inputs),
            "per_N": [{"N": p["N"], "estimate": num(p["estimate"]), "stderr": p["stderr"]} for p in self.per_N],
            "limit": num(self.limit),
            "vanishing_checked": list(self.vanishing_checked),
        }
        if self.vanishing_ok is not None:
            obj["vanishing_ok"] = self.vanishing_ok
        if self.coefficients:
            obj["coefficients"] = [num(c) for c in self.coefficients]
        if isinstance(self.exact_function, RatFn):
            obj["exact_function"] = self.exact_function.to_json_obj()
        if self.details:
            obj["details"] = self.details
        return obj


def _as_ratfn(f) -> RatFn:
    return f if isinstance(f, RatFn) else RatFn.from_poly(f) if isinstance(f, Poly) else RatFn(f)


def scaled_trace_cumulant_exact(
    ensemble: str, polys: Sequence[NCPoly], Ns: Sequence[int] = (), extra_terms: int = 2
) -> CumulantReport:
    """Exact N^-2 C_r(N Tr Y_1, ..., N Tr Y_r) for Y_i = polys[i] (already composed h_i(P_i)).

    ``coefficients[l]`` is the coefficient of N^(2r-2-l); the report
    checks that l = 0 .. 2r-3 vanish and takes the limit from l = 2r-2.
    """
    ensemble = normalize_ensemble(ensemble)
    r = len(polys)
    if not 1 <= r <= MAX_R:
        raise SizeError(f"1 <= r <= {MAX_R} required")
    c = _as_ratfn(cumulant_from_moments(exact_oracle(ensemble, polys)))
    c, shift = scale_cumulant(c, r)
    coeffs = list(series_expand(c, shift + 1 + extra_terms))
    checked = list(range(shift))
    ok = all(coeffs[l] == 0 for l in checked)
    scaled = None
    if ok:
        v = c.num.valuation()
        if c.is_zero():
            scaled = RatFn(0)
        elif v >= shift:
            scaled = RatFn(c.num.shift(-shift), c.den)
    per_N = []
    for N in Ns:
        x0 = Fraction(1, int(N))
        per_N.append({"N": int(N), "estimate": c(x0) * Fraction(int(N)) ** shift, "stderr": 0.0})
    return CumulantReport(
        r=r,
        mode="exact",
        ensemble=ensemble,
        inputs=[format_ncpoly(p) for p in polys],
        coefficients=coeffs,
        limit=coeffs[shift],
        vanishing_checked=checked,
        vanishing_ok=ok,
        exact_function=scaled,
        per_N=per_N,
    )


def cumulant_limit_from_expansions(ensemble: str, polys: Sequence[NCPoly]) -> Fraction:
    """Limit of the scaled cumulant assembled from block expansion coefficients.

    Uses only the Maclaurin coefficients a^B_l of each block moment, so it
    is an independent route to the x^(2r-2) coefficient.
    """
    r = len(polys)
    order = 2 * r - 1
    coef: Dict[Tuple[int, ...], List[Fraction]] = {}

    def block(B):
        if B not in coef:
            coef[B] = exact_expansion(ensemble, [polys[i] for i in B], order).coefficients
        return coef[B]

    total = Fraction(0)
    top = one_partition(r)
    for p in set_partitions(r):
        mu = moebius(p, top)
        series = [Fraction(1)] + [Fraction(0)] * (order - 1)
        for b in p.blocks:
            a = block(tuple(i - 1 for i in b))
            series = [sum(series[i] * a[n - i] for i in range(n + 1)) for n in range(order)]
        total += mu * series[2 * r - 2]
    return total


def smooth_cumulant_limit(
    ensemble: str,
    Ps: Sequence[NCPoly],
    hs: Sequence[Callable],
    K: Sequence | None = None,
    tol: float = 1e-8,
    nodes: int = cheb.DEFAULT_NODES,
    budget: int = DEFAULT_BUDGET,
) -> CumulantReport:
    """Limit of N^-2 C_r(N Tr h_1(P_1), ...) for smooth h_i.

    The scaled cumulant is multilinear, so each h_i is replaced by its
    truncated Chebyshev series in P_i / K_i and the exact limits of the
    basis cumulants are summed.  The reported truncation error is the
    dropped coefficient mass times the largest basis limit seen.
    """
    ensemble = normalize_ensemble(ensemble)
    r = len(Ps)
    if r != len(hs):
        raise ValueError("need one test function per polynomial")
    if not 1 <= r <= 4:
        raise SizeError("smooth cumulant limits support 1 <= r <= 4")
    if ensemble not in LENGTH_CAP:
        raise EnsembleError(f"no exact engine for ensemble {ensemble!r}")
    cap = LENGTH_CAP[ensemble]
    Ks = [as_fraction(k) for k in K] if K is not None else [cheb.spectral_bound(ensemble, P) for P in Ps]
    series = [cheb.cheb_adaptive(h, float(k), tol=min(tol, 1e-10) / 10, M=nodes) for h, k in zip(hs, Ks)]
    qs = [_select_q(s, tol, cap // (r * max(P.degree, 1))) for s, P in zip(series, Ps)]
    calls = math.prod(q + 1 for q in qs)
    if calls > budget:
        raise SizeError(f"truncation degrees {qs} need {calls} cumulant evaluations, budget {budget}")
    basis = {}
    for i, (P, q) in enumerate(zip(Ps, qs)):
        for j in range(q + 1):
            basis[(i, j)] = substitute(cheb.cheb_basis_poly(j, Ks[i]), P, cap=cap)
    total, growth, ok = 0.0, 1.0, True
    # T_0 is constant, so for r >= 2 it drops out of every joint cumulant
    start = 1 if r >= 2 else 0
    for idx in itertools.product(*[range(start, q + 1) for q in qs]):
        rep = scaled_trace_cumulant_exact(ensemble, [basis[(i, j)] for i, j in enumerate(idx)], extra_terms=0)
        ok = ok and bool(rep.vanishing_ok)
        lim = float(rep.limit)
        growth = max(growth, abs(lim))
        total += math.prod(series[i].coeffs[j] for i, j in enumerate(idx)) * lim
    full = math.prod(cheb.tail_bound(s, -1) for s in series)
    kept = math.prod(cheb.tail_bound(s, -1) - cheb.tail_bound(s, q) for s, q in zip(series, qs))
    names = [getattr(h, "name", getattr(h, "__name__", "h")) for h in hs]
    return CumulantReport(
        r=r,
        mode="smooth",
        ensemble=ensemble,
        inputs=[f"{n}({format_ncpoly(P)})" for n, P in zip(names, Ps)],
        limit=total,
        vanishing_checked=list(range(2 * r - 2)),
        vanishing_ok=ok,
        details={
            "K": [fraction_to_str(k) for k in Ks],
            "q": qs,
            "truncation_error": max(full - kept, 0.0) * growth,
        },
    )


# ---------------------------------------------------------------------------
# k-statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KStat:
    index: Tuple[int, ...]
    estimate: float
    stderr: float

    def zscore(self, exact) -> float:
        return abs(self.estimate - float(exact)) / self.stderr if self.stderr > 0 else math.inf


def _kstat_value(Y: np.ndarray, idx: Tuple[int, ...]) -> float:
    n = Y.shape[0]
    if len(idx) == 1:
        return float(Y[:, idx[0]].mean())
    Z = Y - Y.mean(axis=0)

    def m(*cols):
        return float(np.mean(np.prod(Z[:, list(cols)], axis=1)))

    if len(idx) == 2:
        return n / (n - 1) * m(*idx)
    if len(idx) == 3:
        return n * n / ((n - 1) * (n - 2)) * m(*idx)
    if len(idx) == 4:
        i, j, k, l = idx
        pairs = m(i, j) * m(k, l) + m(i, k) * m(j, l) + m(i, l) * m(j, k)
        return n * n * ((n + 1) * m(i, j, k, l) - (n - 1) * pairs) / ((n - 1) * (n - 2) * (n - 3))
    raise SizeError("k-statistics are implemented up to order 4")


def k_statistic(samples, idx: Sequence[int], groups: int = 50) -> KStat:
    """Unbiased joint cumulant estimate for the column multiset idx, with a grouped jackknife error."""
    Y = np.asarray(samples, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n = Y.shape[0]
    idx = tuple(int(i) for i in idx)
    if n < 100:
        raise ValueError(f"k-statistics need at least 100 samples, got {n}")
    if not 1 <= len(idx) <= 4:
        raise SizeError("k-statistics are implemented up to order 4")
    if np.any(Y[:, list(set(idx))].std(axis=0) == 0):
        warnings.warn("degenerate sample: a column has zero variance", RuntimeWarning, stacklevel=2)
    est = _kstat_value(Y, idx)
    g = min(groups, n)
    bounds = np.linspace(0, n, g + 1).astype(int)
    loo = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        keep = np.concatenate([Y[:a], Y[b:]])
        loo.append(_kstat_value(keep, idx))
    loo = np.asarray(loo)
    se = math.sqrt((g - 1) / g * float(np.sum((loo - loo.mean()) ** 2)))
    return KStat(idx, est, se)


def k_statistics(samples, order: int = 4, groups: int = 50) -> Dict[Tuple[int, ...], KStat]:
    """All joint k-statistics of the columns up to the given order."""
    Y = np.asarray(samples, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    r = Y.shape[1]
    out = {}
    for q in range(1, order + 1):
        for idx in itertools.combinations_with_replacement(range(r), q):
            out[idx] = k_statistic(Y, idx, groups)
    return out


# ---------------------------------------------------------------------------
# sampled reports
# ---------------------------------------------------------------------------


def _statistic_vectors(ensemble, Ps, hs, N, draws, seed, workers, d=None):
    d = d or max([P.alphabet_size() for P in Ps] + [1])
    cfg = smp.BatchConfig(ensemble, int(N), d=d, seed=seed, draws=draws, workers=workers)
    vecs = smp.trace_vectors(cfg, Ps, hs)
    vecs = np.real_if_close(vecs, tol=1e6)
    if np.iscomplexobj(vecs):
        raise ValueError("trace statistic is not real; use self-adjoint inputs")
    return cfg, np.asarray(vecs, dtype=float) * cfg.dim  # unnormalised Tr


def sampled_scaled_cumulant(
    ensemble: str,
    Ps: Sequence[NCPoly],
    hs: Sequence,
    Ns: Sequence[int],
    draws: int,
    seed: int = 0,
    workers: int = 1,
) -> CumulantReport:
    """Per-N k-statistic estimates of N^-2 C_r(N Tr h_1(P_1), ...) = N^(r-2) k_r(Tr ...)."""
    ensemble = normalize_ensemble(ensemble)
    r = len(Ps)
    if r > 4:
        raise SizeError("sampled cumulants support r <= 4")
    per_N = []
    for N in Ns:
        _, Y = _statistic_vectors(ensemble, Ps, hs, N, draws, seed, workers)
        ks = k_statistic(Y, tuple(range(r)))
        scale = float(N) ** (r - 2)
        per_N.append({"N": int(N), "estimate": ks.estimate * scale, "stderr": ks.stderr * scale})
    names = [getattr(h, "name", "tr") if h is not None else "id" for h in hs]
    return CumulantReport(
        r=r,
        mode="sampled",
        ensemble=ensemble,
        inputs=[f"{n}({format_ncpoly(P)})" for n, P in zip(names, Ps)],
        per_N=per_N,
        limit=per_N[-1]["estimate"] if per_N else None,
        details={"draws": draws, "seed": seed},
    )


def clt_report(
    ensemble: str,
    Ps: Sequence[NCPoly],
    hs: Sequence,
    N: int,
    draws: int,
    seed: int = 0,
    workers: int = 1,
    exact_polys: Sequence[NCPoly] | None = None,
) -> dict:
    """Gaussianity diagnostics for the vector (Tr h_i(P_i(X)))_i.

    ``exact_polys`` (the composed h_i(P_i)) enables comparison of the sample
    covariance with the exact second cumulant at this N.
    """
    ensemble = normalize_ensemble(ensemble)
    _, Y = _statistic_vectors(ensemble, Ps, hs, N, draws, seed, workers)
    r = Y.shape[1]
    ks = k_statistics(Y, order=4)
    coords = []
    for i in range(r):
        col = Y[:, i]
        k2, k3, k4 = ks[(i, i)], ks[(i, i, i)], ks[(i, i, i, i)]
        mu, sd = float(col.mean()), float(col.std(ddof=1))
        ksd = float(stats.kstest(col, "norm", args=(mu, sd)).statistic) if sd > 0 else 1.0
        coords.append(
            {
                "mean": mu,
                "variance": k2.estimate,
                "variance_stderr": k2.stderr,
                "skewness": k3.estimate / k2.estimate**1.5,
                "skewness_stderr": k3.stderr / k2.estimate**1.5,
                "excess_kurtosis": k4.estimate / k2.estimate**2,
                "excess_kurtosis_stderr": k4.stderr / k2.estimate**2,
                "ks_distance": ksd,
            }
        )
    cov = [[ks[tuple(sorted((i, j)))].estimate for j in range(r)] for i in range(r)]
    report = {
        "ensemble": ensemble,
        "N": int(N),
        "draws": int(draws),
        "seed": int(seed),
        "coordinates": coords,
        "covariance": cov,
    }
    if exact_polys is not None:
        exact = []
        for i in range(r):
            row = []
            for j in range(r):
                rep = scaled_trace_cumulant_exact(ensemble, [exact_polys[i], exact_polys[j]], Ns=[N])
                val = rep.per_N[0]["estimate"]
                se = ks[tuple(sorted((i, j)))].stderr
                row.append(
                    {
                        "exact": fraction_to_str(val),
                        "sampled": cov[i][j],
                        "stderr": se,
                        "z": abs(cov[i][j] - float(val)) / se if se > 0 else math.inf,
                    }
                )
            exact.append(row)
        report["covariance_vs_exact"] = exact
    return report


# ---------------------------------------------------------------------------
# matrix-integral coefficients
# ---------------------------------------------------------------------------


def _multi_indices(slots: int, kmax: int):
    for total in range(1, kmax + 1):
        for k in itertools.product(range(total + 1), repeat=slots):
            if sum(k) == total:
                yield k


def _coeff_entry(ensemble, args, kfact, Ns):
    rep = scaled_trace_cumulant_exact(ensemble, args, Ns=Ns)
    f = Fraction(1, kfact)
    return {
        "per_N": {p["N"]: p["estimate"] * f for p in rep.per_N},
        "limit": rep.limit * f,
        "vanishing_ok": rep.vanishing_ok,
    }


def free_energy_coeffs(
    ensemble: str, V: Sequence[NCPoly], kmax: int, Ns: Sequence[int]
) -> Dict[Tuple[int, ...], dict]:
    """a_k^N = (1 / (N^2 k!)) C_k(N Tr V_1, ...) with slot i repeated k_i times.

    ``V`` holds the composed slot polynomials h_i(P_i).
    """
    if kmax > 4:
        raise SizeError("free-energy coefficients support |k| <= 4")
    out = {}
    for k in _multi_indices(len(V), kmax):
        args = [V[i] for i in range(len(V)) for _ in range(k[i])]
        out[k] = _coeff_entry(ensemble, args, math.prod(math.factorial(v) for v in k), Ns)
    return out


def observable_coeffs(
    ensemble: str, G: NCPoly, V: Sequence[NCPoly], kmax: int, Ns: Sequence[int]
) -> Dict[Tuple[int, ...], dict]:
    """b_k^N = (1 / (N^2 k!)) C_{1,k}(N Tr G, N Tr V_1, ...), including k = 0."""
    if kmax > 3:
        raise SizeError("observable coefficients support |k| <= 3")
    out = {}
    ks = [tuple([0] * len(V))] + list(_multi_indices(len(V), kmax))
    for k in ks:
        args = [G] + [V[i] for i in range(len(V)) for _ in range(k[i])]
        out[k] = _coeff_entry(ensemble, args, math.prod(math.factorial(v) for v in k), Ns)
    return out
