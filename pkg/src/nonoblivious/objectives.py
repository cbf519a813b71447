"""Value oracles for monotone submodular set functions.

Three oracle kinds: an explicit table of all ``2^n`` values, a weighted
coverage function, and the contraction ``(f/x)(A) = f(A + x)`` of another
oracle.  Every oracle counts its ``value`` calls in ``calls``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .bits import elements, fmt
from .errors import DomainError, ScaleError
from .matroids import GroundSet

EXPLICIT_MAX_N = 20
VERIFY_MAX_N = 20


class ValueOracle:
    kind = "abstract"
    normalized = True

    def __init__(self, ground: GroundSet):
        self.ground = ground
        self.calls = 0

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def ground_mask(self) -> int:
        return self.ground.mask

    def value(self, mask: int) -> float:
        if mask < 0 or mask & ~self.ground_mask:
            raise DomainError(f"set {fmt(mask) if mask >= 0 else mask} is not inside the oracle's ground set")
        self.calls += 1
        return self._value(mask)

    __call__ = value

    def _value(self, mask: int) -> float:
        raise NotImplementedError


class ExplicitOracle(ValueOracle):
    """Table of ``2^n`` values indexed by bitmask.

    Construction checks normalization, non-negativity, monotonicity and
    submodularity (``verify=False`` skips the last two).
    """

    kind = "explicit"

    def __init__(self, ground: GroundSet | int, values: Sequence[float], verify: bool = True):
        if isinstance(ground, int):
            ground = GroundSet(ground)
        if ground.n > EXPLICIT_MAX_N:
            raise ScaleError(f"explicit tables are limited to n <= {EXPLICIT_MAX_N}")
        super().__init__(ground)
        arr = np.asarray(values, dtype=float)
        if arr.shape != (1 << ground.n,):
            raise DomainError(f"explicit table needs {1 << ground.n} values, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("explicit table contains non-finite values")
        if arr[0] != 0.0:
            raise DomainError(f"f(empty) must be 0, got {arr[0]}")
        if np.any(arr < 0):
            raise DomainError("explicit table contains negative values")
        self.table = arr
        self._lookup = arr.tolist()
        if verify:
            report = verify_monotone_submodular(self)
            if not report.ok:
                raise DomainError(f"explicit table rejected: {report.reason}")

    def _value(self, mask):
        return self._lookup[mask]


@dataclass(frozen=True)
class CoverageInstance:
    """Weighted coverage: ``f(A) = w(union of sets[a] for a in A)``."""

    weights: tuple[float, ...]
    sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        for w in self.weights:
            if not (w >= 0 and np.isfinite(w)):
                raise DomainError(f"coverage weights must be finite and >= 0, got {w}")
        u = len(self.weights)
        for a, s in enumerate(self.sets):
            for x in s:
                if not 0 <= x < u:
                    raise DomainError(f"set {a} contains point {x} outside universe 0..{u - 1}")

    @property
    def universe(self) -> int:
        return len(self.weights)

    @property
    def n(self) -> int:
        return len(self.sets)

    def membership(self) -> np.ndarray:
        """Boolean (n, universe) matrix, ``M[a, x]`` iff point x is in set a."""
        M = np.zeros((self.n, self.universe), dtype=bool)
        for a, s in enumerate(self.sets):
            M[a, list(s)] = True
        return M


class CoverageOracle(ValueOracle):
    kind = "coverage"

    def __init__(self, instance: CoverageInstance, ground: GroundSet | None = None):
        super().__init__(ground or GroundSet(instance.n))
        if self.ground.n != instance.n:
            raise DomainError("coverage family size must equal the ground set size")
        self.instance = instance
        self._point_masks = [sum(1 << x for x in set(s)) for s in instance.sets]
        # per-byte weight sums so a union mask is summed with one lookup per 8 points
        w = list(instance.weights)
        self._chunks = []
        for start in range(0, len(w), 8):
            block = w[start:start + 8]
            tab = [0.0] * 256
            for b in range(1, 256):
                low = (b & -b).bit_length() - 1
                tab[b] = tab[b & (b - 1)] + (block[low] if low < len(block) else 0.0)
            self._chunks.append(tab)

    def covered(self, mask: int) -> int:
        u = 0
        pm = self._point_masks
        while mask:
            low = mask & -mask
            u |= pm[low.bit_length() - 1]
            mask ^= low
        return u

    def _value(self, mask):
        u = self.covered(mask)
        total = 0.0
        for tab in self._chunks:
            if u == 0:
                break
            total += tab[u & 255]
            u >>= 8
        return total


class ContractedOracle(ValueOracle):
    """``(f/pinned)(A) = f(A | pinned)`` on the ground set minus ``pinned``.

    With ``shift=True`` the constant ``f(pinned)`` is subtracted, which gives a
    normalized function with the same marginals.
    """

    kind = "contracted"

    def __init__(self, base: ValueOracle, pinned: int, shift: bool = False):
        super().__init__(base.ground)
        if pinned & ~base.ground_mask:
            raise DomainError(f"cannot contract {fmt(pinned)}: not in the ground set")
        self.base = base
        self.pinned = pinned
        self.shift = shift
        at_pinned = base.value(pinned)
        self.offset = at_pinned if shift else 0.0
        self.normalized = shift or at_pinned == 0.0

    @property
    def ground_mask(self):
        return self.base.ground_mask & ~self.pinned

    def _value(self, mask):
        return self.base.value(mask | self.pinned) - self.offset


def value(f: ValueOracle, mask: int) -> float:
    return f.value(mask)


def marginal(f: ValueOracle, A: int, B: int) -> float:
    """``f(A | B) - f(A)``."""
    if B & ~A == 0:
        return 0.0
    return f.value(A | B) - f.value(A)


def contract_function(f: ValueOracle, x: int, shift: bool = False) -> ContractedOracle:
    base, pinned = f, 1 << x
    if isinstance(f, ContractedOracle):
        if not f.ground_mask >> x & 1:
            raise DomainError(f"element {x} is not in the contracted ground set")
        base, pinned = f.base, f.pinned | pinned
        shift = shift or f.shift
    return ContractedOracle(base, pinned, shift=shift)


def value_table(f: ValueOracle, max_n: int = VERIFY_MAX_N) -> tuple[list[int], np.ndarray]:
    """All values of ``f`` over subsets of its ground set.

    Returns the ground elements ``elems`` and an array ``T`` where ``T[i]`` is
    ``f`` of the set ``{elems[j] : bit j of i}``.
    """
    elems = elements(f.ground_mask)
    k = len(elems)
    if k > max_n:
        raise ScaleError(f"exhaustive tables are limited to {max_n} elements, got {k}")
    if isinstance(f, ExplicitOracle) and k == f.n:
        return elems, f.table.copy()
    masks = [0]
    for e in elems:
        bit = 1 << e
        masks += [m | bit for m in masks]
    return elems, np.array([f.value(m) for m in masks], dtype=float)


def _curvature_from_table(T: np.ndarray, k: int) -> float:
    idx = np.arange(1 << k)
    worst = 1.0
    base = T[0]
    for j in range(k):
        bit = 1 << j
        single = T[bit] - base
        if single <= 0:
            continue
        A = idx[(idx & bit) == 0]
        ratio = float(np.min(T[A | bit] - T[A])) / single
        worst = min(worst, ratio)
    return float(min(1.0, max(0.0, 1.0 - worst)))


def exact_curvature(f: ValueOracle) -> float:
    """Smallest c with ``f_A(x) >= (1 - c) f_empty(x)`` for all A and x not in A.

    Elements whose singleton marginal is zero impose no constraint.
    """
    elems, T = value_table(f)
    return _curvature_from_table(T, len(elems))


class SubmodularityReport(NamedTuple):
    ok: bool
    reason: str = ""
    witness: tuple[int, int] | None = None

    def __bool__(self):
        return self.ok


def check_table(T: np.ndarray, elems: Sequence[int], require_normalized: bool = True,
                tol: float = 1e-9) -> SubmodularityReport:
    """Normalization, monotonicity and submodularity of a dense value table.

    Submodularity uses the local form ``f(A+x) + f(A+y) >= f(A+x+y) + f(A)``,
    which is equivalent to the lattice inequality over all pairs.  A failing
    witness ``(P, Q)`` is a pair violating ``f(P) + f(Q) >= f(P|Q) + f(P&Q)``
    (or ``P <= Q`` with ``f(P) > f(Q)`` for monotonicity).
    """
    k = len(elems)
    scale = tol * max(1.0, float(np.max(np.abs(T))))

    def expand(i):
        return sum(1 << elems[j] for j in range(k) if i >> j & 1)

    if require_normalized and abs(T[0]) > scale:
        return SubmodularityReport(False, f"not normalized: f(empty) = {T[0]}", (0, 0))
    idx = np.arange(1 << k)
    for j in range(k):
        bit = 1 << j
        A = idx[(idx & bit) == 0]
        bad = np.nonzero(T[A | bit] < T[A] - scale)[0]
        if bad.size:
            a = int(A[bad[0]])
            P, Q = expand(a), expand(a | bit)
            return SubmodularityReport(False, f"not monotone: f({fmt(P)}) > f({fmt(Q)})", (P, Q))
    for j in range(k):
        for i in range(j + 1, k):
            bj, bi = 1 << j, 1 << i
            A = idx[(idx & (bj | bi)) == 0]
            lhs = T[A | bj] + T[A | bi]
            rhs = T[A | bj | bi] + T[A]
            bad = np.nonzero(lhs < rhs - scale)[0]
            if bad.size:
                a = int(A[bad[0]])
                P, Q = expand(a | bj), expand(a | bi)
                return SubmodularityReport(
                    False, f"not submodular: f({fmt(P)}) + f({fmt(Q)}) < f({fmt(P | Q)}) + f({fmt(P & Q)})", (P, Q)
                )
    return SubmodularityReport(True)


def verify_monotone_submodular(f: ValueOracle) -> SubmodularityReport:
    elems, T = value_table(f)
    if np.any(T < 0):
        i = int(np.nonzero(T < 0)[0][0])
        P = sum(1 << elems[j] for j in range(len(elems)) if i >> j & 1)
        return SubmodularityReport(False, f"negative value at {fmt(P)}", (P, P))
    return check_table(T, elems, require_normalized=f.normalized)


# -- random instances ----------------------------------------------------------


def _popcount_arr(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64)
    out = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        out += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return out


def _subset_sums(w: np.ndarray) -> np.ndarray:
    s = np.zeros(1, dtype=float)
    for wj in w:
        s = np.concatenate([s, s + wj])
    return s


def _cap_curvature(T: np.ndarray, n: int, cap: float | None) -> np.ndarray:
    """Add ``kappa * sum of singleton values`` with ``kappa = (1 - cap)/cap``;
    the result has curvature at most ``cap``."""
    if cap is None or cap >= 1:
        return T
    if not 0 < cap:
        raise DomainError(f"curvature cap must be in (0, 1], got {cap}")
    kappa = (1 - cap) / cap
    singles = np.array([T[1 << j] for j in range(n)])
    return T + kappa * _subset_sums(singles)


def random_coverage(n: int, rng: np.random.Generator, universe: int | None = None,
                    density: float = 0.3, weight_law: str = "exponential",
                    curvature_cap: float | None = None) -> CoverageInstance:
    universe = universe or 2 * n
    if weight_law == "exponential":
        w = rng.exponential(1.0, size=universe)
    elif weight_law == "uniform":
        w = rng.uniform(0.0, 1.0, size=universe)
    elif weight_law == "unit":
        w = np.ones(universe)
    else:
        raise DomainError(f"unknown weight law {weight_law!r}")
    member = rng.random((n, universe)) < density
    sets = [tuple(int(x) for x in np.nonzero(member[a])[0]) for a in range(n)]
    weights = [float(x) for x in w]
    if curvature_cap is not None and curvature_cap < 1:
        if not 0 < curvature_cap:
            raise DomainError(f"curvature cap must be in (0, 1], got {curvature_cap}")
        kappa = (1 - curvature_cap) / curvature_cap
        # one private point per set carrying kappa times the set's own weight
        for a in range(n):
            own = sum(weights[x] for x in sets[a])
            weights.append(kappa * own)
            sets[a] = sets[a] + (len(weights) - 1,)
    return CoverageInstance(tuple(weights), tuple(sets))


def budget_additive_table(n: int, rng: np.random.Generator, budget_factor: float = 0.5,
                          curvature_cap: float | None = None) -> np.ndarray:
    w = rng.exponential(1.0, size=n)
    sums = _subset_sums(w)
    T = sums if np.isinf(budget_factor) else np.minimum(sums, budget_factor * w.sum())
    return _cap_curvature(T, n, curvature_cap)


def rank_sum_table(n: int, rng: np.random.Generator, terms: int = 3,
                   curvature_cap: float | None = None) -> np.ndarray:
    """Weighted sum of random partition-matroid rank functions."""
    idx = np.arange(1 << n, dtype=np.int64)
    T = np.zeros(1 << n)
    for _ in range(terms):
        k = int(rng.integers(1, max(2, n // 2) + 1))
        parts = rng.integers(0, k, size=n)
        caps = rng.integers(1, 3, size=k)
        weight = rng.exponential(1.0)
        for p in range(k):
            pm = sum(1 << e for e in range(n) if parts[e] == p)
            T += weight * np.minimum(_popcount_arr(idx & pm), caps[p])
    return _cap_curvature(T, n, curvature_cap)


def random_monotone_submodular(n: int, seed: int, kind: str = "coverage",
                               curvature_cap: float | None = None, **params) -> ValueOracle:
    """Deterministic random oracle.

    ``kind`` is ``"coverage"``, ``"budget-additive"`` or ``"rank-sum"``; the
    latter two are explicit tables and need ``n <= 16``.
    """
    rng = np.random.default_rng(seed)
    if kind == "coverage":
        return CoverageOracle(random_coverage(n, rng, curvature_cap=curvature_cap, **params))
    if n > 16:
        raise ScaleError(f"explicit random instances are limited to n <= 16, got {n}")
    if kind == "budget-additive":
        T = budget_additive_table(n, rng, curvature_cap=curvature_cap, **params)
    elif kind == "rank-sum":
        T = rank_sum_table(n, rng, curvature_cap=curvature_cap, **params)
    else:
        raise DomainError(f"unknown objective kind {kind!r}")
    return ExplicitOracle(n, T)
