"""Set partitions, integer partitions, permutations and pairings.

Set partitions carry the lattice structure used by the cumulant formulas
(order, meet, join, Moebius function, incidence-algebra convolution).
Integer partitions index the irreducible characters of the symmetric group
that enter the unitary Weingarten function.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, Hashable, Iterator, Sequence, Tuple, Union

import numpy as np

from .errors import SizeError

MAX_SET_PARTITION_K = 12
MAX_TABLE_K = 8
MAX_INT_PARTITION_N = 20
MAX_CHARACTER_N = 12
MAX_PAIRING_K = 16


# ---------------------------------------------------------------------------
# set partitions
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class SetPartition:
    """Partition of {1, ..., k} stored in canonical form.

    Blocks are sorted tuples, ordered by their least element, so two
    partitions are equal iff their ``blocks`` tuples are equal.
    """

    k: int
    blocks: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        seen = sorted(i for b in self.blocks for i in b)
        if seen != list(range(1, self.k + 1)):
            raise ValueError(f"blocks {self.blocks} do not partition [1..{self.k}]")
        if any(len(b) == 0 for b in self.blocks):
            raise ValueError("empty block")
        canon = tuple(sorted(tuple(sorted(b)) for b in self.blocks))
        object.__setattr__(self, "blocks", canon)

    @classmethod
    def from_blocks(cls, blocks, k: int | None = None) -> "SetPartition":
        blocks = [tuple(b) for b in blocks]
        if k is None:
            k = sum(len(b) for b in blocks)
        return cls(k, tuple(blocks))

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable]) -> "SetPartition":
        """Level partition of positions 1..k by equal labels."""
        groups: Dict[Hashable, list] = {}
        for pos, lab in enumerate(labels, start=1):
            groups.setdefault(lab, []).append(pos)
        return cls(len(labels), tuple(tuple(g) for g in groups.values()))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_index(self) -> Tuple[int, ...]:
        """0-based block number of each element 1..k (restricted growth string)."""
        out = [0] * self.k
        for j, b in enumerate(self.blocks):
            for i in b:
                out[i - 1] = j
        return tuple(out)

    def __str__(self) -> str:
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


def zero_partition(k: int) -> SetPartition:
    return SetPartition(k, tuple((i,) for i in range(1, k + 1)))


def one_partition(k: int) -> SetPartition:
    return SetPartition(k, (tuple(range(1, k + 1)),))


def _restricted_growth(k: int) -> Iterator[list]:
    a = [0] * k
    yield from _rg_rec(a, 1, 0, k)


def _rg_rec(a, i, mx, k):
    if i == k:
        yield list(a)
        return
    for v in range(mx + 2):
        a[i] = v
        yield from _rg_rec(a, i + 1, max(mx, v), k)


@lru_cache(maxsize=None)
def _set_partitions_cached(k: int) -> Tuple[SetPartition, ...]:
    out = []
    for rgs in _restricted_growth(k):
        blocks: Dict[int, list] = {}
        for pos, b in enumerate(rgs, start=1):
            blocks.setdefault(b, []).append(pos)
        out.append(SetPartition(k, tuple(tuple(v) for v in blocks.values())))
    return tuple(out)


def set_partitions(k: int) -> list:
    """All Bell(k) partitions of [k], each in canonical form."""
    if not 1 <= k <= MAX_SET_PARTITION_K:
        raise SizeError(f"set_partitions needs 1 <= k <= {MAX_SET_PARTITION_K}, got {k}")
    return list(_set_partitions_cached(k))


def _check_same_k(p1: SetPartition, p2: SetPartition) -> None:
    if p1.k != p2.k:
        raise ValueError(f"partitions of different ground sets: {p1.k} vs {p2.k}")


def leq(p1: SetPartition, p2: SetPartition) -> bool:
    """True iff every block of ``p1`` lies inside a block of ``p2``."""
    _check_same_k(p1, p2)
    idx2 = p2.block_index()
    return all(len({idx2[i - 1] for i in b}) == 1 for b in p1.blocks)


def meet(p1: SetPartition, p2: SetPartition) -> SetPartition:
    _check_same_k(p1, p2)
    i1, i2 = p1.block_index(), p2.block_index()
    return SetPartition.from_labels(list(zip(i1, i2)))


class _DSU:
    """Union-find over 0..n-1 with path halving."""

    __slots__ = ("parent", "components")

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.components = n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra
            self.components -= 1


def join(p1: SetPartition, p2: SetPartition) -> SetPartition:
    _check_same_k(p1, p2)
    dsu = _DSU(p1.k)
    for p in (p1, p2):
        for b in p.blocks:
            for i in b[1:]:
                dsu.union(b[0] - 1, i - 1)
    return SetPartition.from_labels([dsu.find(i) for i in range(p1.k)])


def moebius(p1: SetPartition, p2: SetPartition) -> int:
    """Moebius function of the partition lattice; 0 when p1 is not <= p2."""
    _check_same_k(p1, p2)
    if not leq(p1, p2):
        return 0
    idx2 = p2.block_index()
    counts = Counter(idx2[b[0] - 1] for b in p1.blocks)
    val = 1
    for lam in counts.values():
        val *= (-1) ** (lam - 1) * math.factorial(lam - 1)
    return val


# incidence algebra ---------------------------------------------------------

IncidenceFunction = Union[Dict[Tuple[SetPartition, SetPartition], object], Callable]


@lru_cache(maxsize=None)
def _intervals(k: int) -> Tuple[Tuple[SetPartition, SetPartition], ...]:
    parts = _set_partitions_cached(k)
    return tuple((a, b) for a in parts for b in parts if leq(a, b))


def comparable_pairs(k: int) -> list:
    if not 1 <= k <= MAX_TABLE_K:
        raise SizeError(f"incidence tables need k <= {MAX_TABLE_K}, got {k}")
    return list(_intervals(k))


def _as_callable(f: IncidenceFunction) -> Callable:
    if callable(f):
        return f
    return lambda a, b: f.get((a, b), 0)


def zeta_table(k: int) -> dict:
    return {pair: 1 for pair in comparable_pairs(k)}


def delta_table(k: int) -> dict:
    return {(a, b): int(a == b) for a, b in comparable_pairs(k)}


def moebius_table(k: int) -> dict:
    return {(a, b): moebius(a, b) for a, b in comparable_pairs(k)}


def incidence_convolve(f: IncidenceFunction, g: IncidenceFunction, k: int) -> dict:
    """(f*g)(a, b) = sum over a <= c <= b of f(a, c) g(c, b), tabulated."""
    fc, gc = _as_callable(f), _as_callable(g)
    pairs = comparable_pairs(k)
    above: Dict[SetPartition, list] = {}
    for a, c in pairs:
        above.setdefault(a, []).append(c)
    idx_cache = {}
    out = {}
    for a, b in pairs:
        ib = idx_cache.get(b)
        if ib is None:
            ib = idx_cache[b] = b.block_index()
        total = 0
        for c in above[a]:
            # c <= b check via block indices of b
            if all(len({ib[i - 1] for i in blk}) == 1 for blk in c.blocks):
                total += fc(a, c) * gc(c, b)
        out[(a, b)] = total
    return out


# ---------------------------------------------------------------------------
# integer partitions and symmetric-group characters
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class IntPartition:
    parts: Tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"non-positive part in {parts}")
        object.__setattr__(self, "parts", tuple(sorted(parts, reverse=True)))

    @property
    def n(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def cells(self) -> Iterator[Tuple[int, int]]:
        """Young-diagram cells (i, j), 1-based row and column."""
        for i, p in enumerate(self.parts, start=1):
            for j in range(1, p + 1):
                yield i, j

    def conjugate(self) -> "IntPartition":
        if not self.parts:
            return self
        return IntPartition(tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0])))


def _as_intpartition(lam) -> IntPartition:
    return lam if isinstance(lam, IntPartition) else IntPartition(tuple(lam))


def _partitions_desc(n: int, maxpart: int) -> Iterator[Tuple[int, ...]]:
    if n == 0:
        yield ()
        return
    for p in range(min(n, maxpart), 0, -1):
        for rest in _partitions_desc(n - p, p):
            yield (p,) + rest


@lru_cache(maxsize=None)
def _int_partitions_cached(n: int) -> Tuple[IntPartition, ...]:
    return tuple(sorted(IntPartition(p) for p in _partitions_desc(n, n)))


def integer_partitions(n: int) -> list:
    """All partitions of n, lexicographically increasing as tuples."""
    if not 0 <= n <= MAX_INT_PARTITION_N:
        raise SizeError(f"integer_partitions needs 0 <= n <= {MAX_INT_PARTITION_N}, got {n}")
    return list(_int_partitions_cached(n))


def _beta_set(parts: Tuple[int, ...]) -> Tuple[int, ...]:
    ell = len(parts)
    return tuple(p + ell - 1 - i for i, p in enumerate(parts))


def _from_beta(beta) -> Tuple[int, ...]:
    b = sorted(beta, reverse=True)
    ell = len(b)
    parts = tuple(v - (ell - 1 - i) for i, v in enumerate(b))
    return tuple(p for p in parts if p > 0)


@lru_cache(maxsize=None)
def _mn(parts: Tuple[int, ...], mu: Tuple[int, ...]) -> int:
    # Murnaghan-Nakayama on beta-sets: removing a rim hook of length k moves
    # one bead from b to b-k; the sign counts beads jumped over.
    if not mu:
        return 1 if not parts else 0
    k, rest = mu[0], mu[1:]
    beta = _beta_set(parts)
    bset = set(beta)
    total = 0
    for b in beta:
        t = b - k
        if t < 0 or t in bset:
            continue
        height = sum(1 for c in beta if t < c < b)
        new = _from_beta((bset - {b}) | {t})
        total += (-1) ** height * _mn(new, rest)
    return total


def character(lam, mu) -> int:
    """Irreducible character chi^lam evaluated on cycle type mu (exact integer)."""
    lam, mu = _as_intpartition(lam), _as_intpartition(mu)
    if lam.n != mu.n:
        raise ValueError(f"character: |lambda|={lam.n} but |mu|={mu.n}")
    if lam.n > MAX_CHARACTER_N:
        raise SizeError(f"character needs n <= {MAX_CHARACTER_N}")
    return _mn(lam.parts, mu.parts)


def hook_lengths(lam) -> list:
    lam = _as_intpartition(lam)
    conj = lam.conjugate().parts
    return [lam.parts[i - 1] - j + conj[j - 1] - i + 1 for i, j in lam.cells()]


def dimension(lam) -> int:
    """f^lam = n! / prod of hook lengths."""
    lam = _as_intpartition(lam)
    if lam.n > MAX_CHARACTER_N:
        raise SizeError(f"dimension needs n <= {MAX_CHARACTER_N}")
    return math.factorial(lam.n) // math.prod(hook_lengths(lam))


def class_size(mu) -> int:
    """Number of permutations of cycle type mu."""
    mu = _as_intpartition(mu)
    denom = 1
    for part, mult in Counter(mu.parts).items():
        denom *= part**mult * math.factorial(mult)
    return math.factorial(mu.n) // denom


# ---------------------------------------------------------------------------
# permutations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Permutation:
    """Bijection of {0, ..., k-1}; ``images[i]`` is the image of i."""

    images: Tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"not a bijection: {images}")
        object.__setattr__(self, "images", images)

    def __len__(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        """Composition: (self * other)(i) = self(other(i))."""
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> list:
        seen = [False] * len(self.images)
        out = []
        for s in range(len(self.images)):
            if seen[s]:
                continue
            cyc = []
            i = s
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i]
            out.append(tuple(cyc))
        return out

    def cycle_type(self) -> IntPartition:
        return IntPartition(tuple(len(c) for c in self.cycles()))

    def pairs(self) -> list:
        """Two-cycles of an involution, as sorted 0-based pairs."""
        return sorted((i, j) for i, j in enumerate(self.images) if i < j)


def cycle_type(p) -> IntPartition:
    if not isinstance(p, Permutation):
        p = Permutation(tuple(p))
    return p.cycle_type()


# ---------------------------------------------------------------------------
# pairings
# ---------------------------------------------------------------------------


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def _pairings_of(positions: list) -> Iterator[list]:
    if not positions:
        yield []
        return
    first, rest = positions[0], positions[1:]
    for idx, other in enumerate(rest):
        for sub in _pairings_of(rest[:idx] + rest[idx + 1 :]):
            yield [(first, other)] + sub


def matched_pairings(labels: Sequence[Hashable]) -> Iterator[Permutation]:
    """Fixed-point-free involutions pairing only positions with equal labels.

    Produced lazily.  A label class of odd size admits no pairing, so the
    iterator is then empty.
    """
    k = len(labels)
    if k > MAX_PAIRING_K:
        raise SizeError(f"matched_pairings needs k <= {MAX_PAIRING_K}, got {k}")
    classes: Dict[Hashable, list] = {}
    for pos, lab in enumerate(labels):
        classes.setdefault(lab, []).append(pos)
    if any(len(c) % 2 for c in classes.values()):
        return iter(())

    def gen():
        for combo in itertools.product(*(_pairings_of(c) for c in classes.values())):
            img = [0] * k
            for pairs in combo:
                for a, b in pairs:
                    img[a], img[b] = b, a
            yield Permutation(tuple(img))

    return gen()


def pairing_count(labels: Sequence[Hashable]) -> int:
    counts = Counter(labels)
    if any(c % 2 for c in counts.values()):
        return 0
    return math.prod(double_factorial(c - 1) for c in counts.values())


@lru_cache(maxsize=None)
def _pairing_template(m: int) -> np.ndarray:
    # rows are involutions of range(m), (m-1)!! of them
    if m == 0:
        return np.zeros((1, 0), dtype=np.int16)
    if m % 2:
        return np.zeros((0, m), dtype=np.int16)
    sub = _pairing_template(m - 2)
    blocks = []
    for j in range(1, m):
        rest = np.array([i for i in range(1, m) if i != j], dtype=np.int16)
        block = np.empty((sub.shape[0], m), dtype=np.int16)
        block[:, 0] = j
        block[:, j] = 0
        block[:, rest] = rest[sub]
        blocks.append(block)
    out = np.concatenate(blocks, axis=0)
    out.setflags(write=False)
    return out


def pairing_array(labels: Sequence[Hashable]) -> np.ndarray:
    """All matched pairings as an integer array of shape (count, k).

    Row order matches ``matched_pairings`` up to permutation; this is the
    vectorised form used by the moment engines.
    """
    k = len(labels)
    if k > MAX_PAIRING_K:
        raise SizeError(f"pairing_array needs k <= {MAX_PAIRING_K}, got {k}")
    classes: Dict[Hashable, list] = {}
    for pos, lab in enumerate(labels):
        classes.setdefault(lab, []).append(pos)
    if any(len(c) % 2 for c in classes.values()):
        return np.zeros((0, k), dtype=np.int16)
    out = np.zeros((1, k), dtype=np.int16)
    for pos in classes.values():
        pos = np.asarray(pos, dtype=np.int16)
        t = pos[_pairing_template(len(pos))]
        n_old, n_new = out.shape[0], t.shape[0]
        merged = np.repeat(out, n_new, axis=0)
        merged[:, pos] = np.tile(t, (n_old, 1))
        out = merged
    return out


@lru_cache(maxsize=None)
def permutation_array(m: int) -> np.ndarray:
    """All m! permutations of range(m) as rows (lexicographic)."""
    out = np.array(list(itertools.permutations(range(m))), dtype=np.int16).reshape(-1, m)
    out.setflags(write=False)
    return out


def cycle_counts(perms: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    """Number of cycles of each row of a 2-D permutation array.

    Pointer doubling: after t rounds every entry holds the minimum over
    2^t successive images, and a cycle is counted at its minimal element.
    """
    perms = np.asarray(perms)
    n_rows, n = perms.shape
    out = np.empty(n_rows, dtype=np.int64)
    if n == 0:
        out[:] = 0
        return out
    rounds = max(1, int(np.ceil(np.log2(n))))
    ident = np.arange(n, dtype=np.int64)
    for s in range(0, n_rows, chunk):
        p = perms[s : s + chunk].astype(np.int64)
        m = np.broadcast_to(ident, p.shape).copy()
        for _ in range(rounds):
            m = np.minimum(m, np.take_along_axis(m, p, axis=1))
            p = np.take_along_axis(p, p, axis=1)
        out[s : s + chunk] = (m == ident).sum(axis=1)
    return out
