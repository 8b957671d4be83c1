"""Seeded Monte Carlo for Gaussian ensembles and Haar-distributed groups.

Every draw i uses its own generator built from ``SeedSequence(seed,
spawn_key=(i,))``, so the values do not depend on how draws are split
across workers.  GSE and Haar-Sp matrices are returned in the 2N x 2N
complex representation; N always denotes the quaternionic size for them.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import EnsembleError, NumericError, SizeError
from .ncpoly import NCPoly, is_selfadjoint

FAMILIES = ("gue", "goe", "gse", "haar-u", "haar-o", "haar-sp")
MAX_N = 1024
STRUCT_TOL = 1e-10


# ---------------------------------------------------------------------------
# matrix samplers
# ---------------------------------------------------------------------------


def sample_gue(N: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian, E|H_ij|^2 = 1/N for every entry."""
    a = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    a /= math.sqrt(2)
    return (a + a.conj().T) / math.sqrt(2 * N)


def sample_goe(N: int, rng: np.random.Generator) -> np.ndarray:
    """Real symmetric, off-diagonal variance 1/N and diagonal variance 2/N."""
    a = rng.standard_normal((N, N))
    return (a + a.T) / math.sqrt(2 * N)


def sample_gse(N: int, rng: np.random.Generator) -> np.ndarray:
    """2N x 2N self-dual Hermitian matrix built from quaternion entries.

    Entry (i, j) is a + b i + c j + d k realised as
    [[a + ib, c + id], [-c + id, a - ib]].  Off-diagonal components have
    variance 1/(4N), the real diagonal 1/(2N); this gives
    E[tr H^2] = 1 - 1/(2N) with tr normalised by 2N.
    """
    s = 1.0 / math.sqrt(4 * N)

    def sym(x):
        return (x + x.T) / math.sqrt(2)

    def anti(x):
        return (x - x.T) / math.sqrt(2)

    a = sym(rng.standard_normal((N, N)) * s)  # diagonal variance 2 s^2
    b = anti(rng.standard_normal((N, N)) * s)
    c = anti(rng.standard_normal((N, N)) * s)
    d = anti(rng.standard_normal((N, N)) * s)
    H = np.empty((2 * N, 2 * N), dtype=complex)
    H[0::2, 0::2] = a + 1j * b
    H[0::2, 1::2] = c + 1j * d
    H[1::2, 0::2] = -c + 1j * d
    H[1::2, 1::2] = a - 1j * b
    return H


def haar_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_orthogonal(N: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((N, N)))
    return q * np.sign(np.diagonal(r))


def _quaternion_partner(v: np.ndarray) -> np.ndarray:
    # -J conj(v) with J = blockdiag([[0, 1], [-1, 0]])
    w = np.empty_like(v)
    w[0::2] = -np.conj(v[1::2])
    w[1::2] = np.conj(v[0::2])
    return w


def haar_symplectic(N: int, rng: np.random.Generator) -> np.ndarray:
    """Haar element of Sp(N) as a 2N x 2N unitary commuting with the quaternionic structure.

    Quaternionic Gram-Schmidt: each new Gaussian column is orthogonalised
    against the previous ones and followed by its partner -J conj(v).
    """
    n = 2 * N
    S = np.empty((n, n), dtype=complex)
    for i in range(N):
        v = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2)
        if i:
            prev = S[:, : 2 * i]
            v = v - prev @ (prev.conj().T @ v)
            v = v - prev @ (prev.conj().T @ v)  # second pass for stability
        v /= np.linalg.norm(v)
        S[:, 2 * i] = v
        S[:, 2 * i + 1] = _quaternion_partner(v)
    return S


SAMPLERS = {
    "gue": sample_gue,
    "goe": sample_goe,
    "gse": sample_gse,
    "haar-u": haar_unitary,
    "haar-o": haar_orthogonal,
    "haar-sp": haar_symplectic,
}


def family_dim(family: str, N: int) -> int:
    return 2 * N if family in ("gse", "haar-sp") else N


def sample(family: str, N: int, rng: np.random.Generator) -> np.ndarray:
    if family not in SAMPLERS:
        raise EnsembleError(f"unknown ensemble {family!r}; expected one of {FAMILIES}")
    if not 2 <= N <= MAX_N:
        raise SizeError(f"N must be in [2, {MAX_N}], got {N}")
    return SAMPLERS[family](N, rng)


# ---------------------------------------------------------------------------
# structural predicates
# ---------------------------------------------------------------------------


def _J(n: int) -> np.ndarray:
    J = np.zeros((n, n))
    J[0::2, 1::2] = np.eye(n // 2)
    J[1::2, 0::2] = -np.eye(n // 2)
    return J


def is_hermitian(M, tol=STRUCT_TOL) -> bool:
    return bool(np.max(np.abs(M - M.conj().T)) <= tol)


def is_real_symmetric(M, tol=STRUCT_TOL) -> bool:
    return bool(np.isrealobj(M) or np.max(np.abs(np.imag(M))) <= tol) and is_hermitian(np.real(M), tol)


def is_self_dual(M, tol=STRUCT_TOL) -> bool:
    n = M.shape[0]
    if n % 2:
        return False
    J = _J(n)
    return bool(np.max(np.abs(J @ M.conj() @ J.T - M)) <= tol)


def is_unitary(M, tol=STRUCT_TOL) -> bool:
    return bool(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))) <= tol)


def is_orthogonal(M, tol=STRUCT_TOL) -> bool:
    return bool(np.isrealobj(M)) and is_unitary(M, tol)


def is_unitary_symplectic(M, tol=STRUCT_TOL) -> bool:
    return is_unitary(M, tol) and is_self_dual(M, tol)


PREDICATES = {
    "gue": is_hermitian,
    "goe": is_real_symmetric,
    "gse": lambda M, tol=STRUCT_TOL: is_hermitian(M, tol) and is_self_dual(M, tol),
    "haar-u": is_unitary,
    "haar-o": is_orthogonal,
    "haar-sp": is_unitary_symplectic,
}


def check_structure(family: str, M, tol=STRUCT_TOL) -> bool:
    return PREDICATES[family](M, tol)


# ---------------------------------------------------------------------------
# polynomial evaluation and trace statistics
# ---------------------------------------------------------------------------


def evaluate_ncpoly(matrices: Sequence[np.ndarray], P: NCPoly, hermitian_letters: bool = False) -> np.ndarray:
    """P evaluated at matrices[0] = x1, matrices[1] = x2, ...; x_l' maps to the conjugate transpose.

    When P is self-adjoint the result is checked to be Hermitian and then
    symmetrised.
    """
    if not matrices:
        raise ValueError("no matrices supplied")
    n = matrices[0].shape[0]
    if any(m.shape != (n, n) for m in matrices):
        raise ValueError("matrix dimensions differ")
    if P.alphabet_size() > len(matrices):
        raise ValueError(f"polynomial uses {P.alphabet_size()} letters, got {len(matrices)} matrices")
    adj = [None] * len(matrices)
    out = np.zeros((n, n), dtype=complex)
    for w, c in P.items():
        if not w:
            out += complex(c) * np.eye(n)
            continue
        acc = None
        for l in w:
            if l.starred:
                if adj[l.index - 1] is None:
                    adj[l.index - 1] = matrices[l.index - 1].conj().T
                m = adj[l.index - 1]
            else:
                m = matrices[l.index - 1]
            acc = m if acc is None else acc @ m
        out += complex(c) * acc
    if is_selfadjoint(P, hermitian_letters=hermitian_letters):
        scale = max(1.0, float(np.max(np.abs(out))))
        if np.max(np.abs(out - out.conj().T)) > 1e-9 * scale:
            raise NumericError("self-adjoint polynomial produced a non-Hermitian matrix")
        out = (out + out.conj().T) / 2
    return out


def trace_statistic(X: np.ndarray, h: Callable) -> float:
    """tr h(X) = (1/dim) sum_i h(lambda_i) for Hermitian X."""
    try:
        lam = np.linalg.eigvalsh(X)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed: {exc}") from exc
    vals = np.asarray(h(lam), dtype=float)
    if vals.shape != lam.shape:
        vals = np.broadcast_to(vals, lam.shape)
    return float(np.mean(vals))


def normalized_trace(M: np.ndarray) -> complex:
    return complex(np.trace(M)) / M.shape[0]


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BatchConfig:
    ensemble: str
    N: int
    d: int = 1
    seed: int = 0
    draws: int = 1000
    workers: int = 1
    chunk: int = 256

    def __post_init__(self):
        if self.ensemble not in FAMILIES:
            raise EnsembleError(f"unknown ensemble {self.ensemble!r}")
        if not 2 <= self.N <= MAX_N:
            raise SizeError(f"N must be in [2, {MAX_N}]")
        if self.draws < 1 or self.d < 1 or self.workers < 1:
            raise ValueError("draws, d and workers must be positive")

    @property
    def dim(self) -> int:
        return family_dim(self.ensemble, self.N)


def draw_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def draw_matrices(config: BatchConfig, i: int) -> List[np.ndarray]:
    rng = draw_rng(config.seed, i)
    return [sample(config.ensemble, config.N, rng) for _ in range(config.d)]


def run_draws(config: BatchConfig, fn: Callable[[List[np.ndarray]], Sequence]) -> np.ndarray:
    """Array of fn(matrices of draw i) over all draws, in draw order."""

    def work(lo: int, hi: int):
        return [np.asarray(fn(draw_matrices(config, i))) for i in range(lo, hi)]

    bounds = [(lo, min(lo + config.chunk, config.draws)) for lo in range(0, config.draws, config.chunk)]
    if config.workers == 1:
        parts = [work(lo, hi) for lo, hi in bounds]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(lambda b: work(*b), bounds))
    rows = [r for part in parts for r in part]
    return np.stack(rows)


@dataclass
class MCEstimate:
    mean: complex | float
    stderr: float
    draws: int
    raw: Optional[np.ndarray] = None

    def zscore(self, exact) -> float:
        diff = abs(complex(self.mean) - complex(exact))
        if self.stderr == 0:
            return 0.0 if diff == 0 else math.inf
        return diff / self.stderr


def _estimate(values: np.ndarray, keep_raw: bool = True) -> MCEstimate:
    v = np.asarray(values)
    n = v.shape[0]
    mean = v.mean()
    # delete-one jackknife of a mean reduces to the usual standard error
    if np.iscomplexobj(v):
        se = math.sqrt((np.var(v.real, ddof=1) + np.var(v.imag, ddof=1)) / n) if n > 1 else math.inf
        m = complex(mean)
        mean = m.real if m.imag == 0 else m
    else:
        se = math.sqrt(np.var(v, ddof=1) / n) if n > 1 else math.inf
        mean = float(mean)
    return MCEstimate(mean, float(se), n, v if keep_raw else None)


def _slot_value(mats, P: NCPoly, h, hermitian: bool):
    X = evaluate_ncpoly(mats, P, hermitian_letters=hermitian)
    if h is None:
        return normalized_trace(X)
    return trace_statistic(X, h)


def trace_vectors(config: BatchConfig, Ps: Sequence[NCPoly], hs: Sequence | None = None) -> np.ndarray:
    """Per-draw normalised traces tr h_i(P_i(X)) with shape (draws, r).

    ``h_i = None`` means tr P_i itself (no eigendecomposition, complex values allowed).
    """
    hs = list(hs) if hs is not None else [None] * len(Ps)
    hermitian = config.ensemble in ("gue", "goe", "gse")
    for P in Ps:
        if P.alphabet_size() > config.d:
            raise ValueError(f"polynomial {P} needs d >= {P.alphabet_size()}")

    def fn(mats):
        return [_slot_value(mats, P, h, hermitian) for P, h in zip(Ps, hs)]

    return run_draws(config, fn)


def mc_expect_trace_product(config: BatchConfig, Ps: Sequence[NCPoly], hs: Sequence | None = None) -> MCEstimate:
    """Mean of prod_i tr h_i(P_i(X)) with its standard error; raw per-draw vectors attached."""
    vecs = trace_vectors(config, Ps, hs)
    est = _estimate(np.prod(vecs, axis=1))
    est.raw = vecs
    return est


def battery(config: BatchConfig, products: Sequence[Sequence[NCPoly]]) -> List[MCEstimate]:
    """Estimates of E[prod tr P] for many trace products, sharing the same draws."""
    slots: List[NCPoly] = []
    where: dict = {}
    index = []
    for prod in products:
        ids = []
        for P in prod:
            key = (tuple(sorted(P.terms.items(), key=repr)))
            if key not in where:
                where[key] = len(slots)
                slots.append(P)
            ids.append(where[key])
        index.append(ids)
    vecs = trace_vectors(config, slots)
    out = []
    for ids in index:
        vals = np.prod(vecs[:, ids], axis=1) if ids else np.ones(vecs.shape[0])
        out.append(_estimate(vals, keep_raw=False))
    return out


def write_csv(path: str, raw: np.ndarray) -> None:
    """Stream raw draws as (draw, statistic, value) rows; written atomically."""
    raw = np.asarray(raw)
    if raw.ndim == 1:
        raw = raw[:, None]
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["draw", "statistic", "value"])
        for i, row in enumerate(raw):
            for j, v in enumerate(row):
                v = complex(v)
                w.writerow([i, j, repr(v.real) if v.imag == 0 else repr(v)])
    os.replace(tmp, path)
