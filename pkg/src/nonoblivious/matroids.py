"""Matroids given by independence oracles.

Sets are integer bitmasks over dense element ids ``0..n-1`` (see :mod:`bits`).
Every scan runs in ascending element-id order so that solvers built on top
of these routines are deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterable, Iterator, NamedTuple, Sequence

from .bits import elements, fmt, full_mask, popcount
from .errors import DomainError, MatroidAxiomError, PreconditionError, ScaleError

EXPLICIT_MAX_N = 24


@dataclass(frozen=True)
class GroundSet:
    n: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1:
            raise DomainError(f"ground set needs n >= 1, got {self.n}")
        if self.labels is not None:
            if len(self.labels) != self.n:
                raise DomainError(f"expected {self.n} labels, got {len(self.labels)}")
            if len(set(self.labels)) != self.n:
                raise DomainError("ground set labels must be unique")

    @property
    def mask(self) -> int:
        return full_mask(self.n)


class SwapMove(NamedTuple):
    out: int
    add: int
    result: int


class AxiomCheck(NamedTuple):
    ok: bool
    reason: str = ""
    witness: tuple[int, int] | None = None

    def __bool__(self):
        return self.ok


class Matroid:
    """Base class.  Subclasses implement ``_independent(mask)``."""

    kind = "abstract"

    def __init__(self, ground: GroundSet):
        self.ground = ground

    @property
    def n(self) -> int:
        return self.ground.n

    @property
    def ground_mask(self) -> int:
        """Elements that belong to this matroid's ground set."""
        return self.ground.mask

    @property
    def size(self) -> int:
        return popcount(self.ground_mask)

    def _independent(self, mask: int) -> bool:
        raise NotImplementedError

    def is_independent(self, mask: int) -> bool:
        if mask < 0 or mask >> self.n:
            raise DomainError(f"set {fmt(mask) if mask >= 0 else mask} has ids outside 0..{self.n - 1}")
        if mask & ~self.ground_mask:
            return False
        return self._independent(mask)

    @cached_property
    def rank(self) -> int:
        return popcount(extend_to_base(self, 0))

    def is_base(self, mask: int) -> bool:
        return self.is_independent(mask) and popcount(mask) == self.rank

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, rank={self.rank})"


class UniformMatroid(Matroid):
    kind = "uniform"

    def __init__(self, ground: GroundSet | int, r: int):
        if isinstance(ground, int):
            ground = GroundSet(ground)
        super().__init__(ground)
        if not 0 <= r <= ground.n:
            raise DomainError(f"uniform rank {r} outside 0..{ground.n}")
        self.r = r

    def _independent(self, mask):
        return popcount(mask) <= self.r


class PartitionMatroid(Matroid):
    """At most ``capacities[p]`` elements from each part ``p``.

    ``parts[e]`` is the part id of element ``e``.
    """

    kind = "partition"

    def __init__(self, ground: GroundSet | int, parts: Sequence[int], capacities: Sequence[int]):
        if isinstance(ground, int):
            ground = GroundSet(ground)
        super().__init__(ground)
        if len(parts) != ground.n:
            raise DomainError(f"partition assigns {len(parts)} elements, ground has {ground.n}")
        for p in parts:
            if not 0 <= p < len(capacities):
                raise DomainError(f"part id {p} has no capacity")
        if any(cap < 0 for cap in capacities):
            raise DomainError("partition capacities must be >= 0")
        self.parts = tuple(int(p) for p in parts)
        self.capacities = tuple(int(c) for c in capacities)
        self._part_masks = [0] * len(capacities)
        for e, p in enumerate(self.parts):
            self._part_masks[p] |= 1 << e

    def _independent(self, mask):
        for pm, cap in zip(self._part_masks, self.capacities):
            if popcount(mask & pm) > cap:
                return False
        return True


class ExplicitMatroid(Matroid):
    """Independent sets listed explicitly; validated at construction."""

    kind = "explicit"

    def __init__(self, ground: GroundSet | int, independents: Iterable[int]):
        if isinstance(ground, int):
            ground = GroundSet(ground)
        super().__init__(ground)
        if ground.n > EXPLICIT_MAX_N:
            raise ScaleError(f"explicit matroids are limited to n <= {EXPLICIT_MAX_N}")
        family = frozenset(independents)
        for s in family:
            if s < 0 or s >> ground.n:
                raise DomainError(f"independent set has ids outside 0..{ground.n - 1}")
        check = verify_matroid_axioms(family, ground)
        if not check.ok:
            raise MatroidAxiomError(check.reason, check.witness)
        self.independents = family

    def _independent(self, mask):
        return mask in self.independents


class ContractedMatroid(Matroid):
    """``base / pinned``: A is independent iff A misses ``pinned`` and
    ``A | pinned`` is independent in ``base``.  Element ids are unchanged;
    pinned elements are simply removed from the ground set."""

    kind = "contracted"

    def __init__(self, base: Matroid, pinned: int):
        super().__init__(base.ground)
        if not base.is_independent(pinned):
            raise PreconditionError(f"cannot contract dependent set {fmt(pinned)}")
        self.base = base
        self.pinned = pinned

    @property
    def ground_mask(self):
        return self.base.ground_mask & ~self.pinned

    def _independent(self, mask):
        return self.base._independent(mask | self.pinned)


def is_independent(m: Matroid, mask: int) -> bool:
    return m.is_independent(mask)


def rank(m: Matroid) -> int:
    return m.rank


def extend_to_base(m: Matroid, mask: int) -> int:
    """Greedily add elements in ascending id order until no addition stays independent."""
    if not m.is_independent(mask):
        raise PreconditionError(f"{fmt(mask)} is not independent")
    for e in elements(m.ground_mask & ~mask):
        cand = mask | (1 << e)
        if m._independent(cand):
            mask = cand
    return mask


def _require_base(m: Matroid, mask: int, name: str = "set"):
    if not m.is_base(mask):
        raise PreconditionError(f"{name} {fmt(mask)} is not a base")


def swap_neighborhood(m: Matroid, S: int) -> Iterator[SwapMove]:
    """Feasible single swaps of base ``S``, ``out`` ascending then ``add`` ascending."""
    _require_base(m, S, "S")
    outside = elements(m.ground_mask & ~S)
    for e in elements(S):
        rest = S & ~(1 << e)
        for x in outside:
            cand = rest | (1 << x)
            if m._independent(cand):
                yield SwapMove(e, x, cand)


def contract(m: Matroid, x: int) -> ContractedMatroid:
    bit = 1 << x
    if isinstance(m, ContractedMatroid):
        if not m.is_independent(bit):
            raise PreconditionError(f"{{{x}}} is dependent in the contracted matroid")
        return ContractedMatroid(m.base, m.pinned | bit)
    return ContractedMatroid(m, bit)


def _augment(a, adj, match_b, seen):
    for b in adj[a]:
        if b in seen:
            continue
        seen.add(b)
        if match_b.get(b) is None or _augment(match_b[b], adj, match_b, seen):
            match_b[b] = a
            return True
    return False


def brualdi_bijection(m: Matroid, A: int, B: int) -> dict[int, int]:
    """Bijection pi: A -> B with A - a + pi(a) a base for every a, identity on A & B.

    The identity part is fixed; the rest is a perfect matching in the exchange
    graph between A - B and B - A, found with augmenting paths.
    """
    _require_base(m, A, "A")
    _require_base(m, B, "B")
    pi = {a: a for a in elements(A & B)}
    left = elements(A & ~B)
    right = elements(B & ~A)
    adj = {a: [b for b in right if m._independent((A & ~(1 << a)) | (1 << b))] for a in left}
    match_b: dict[int, int] = {}
    for a in left:
        if not _augment(a, adj, match_b, set()):
            raise RuntimeError(
                f"no exchange matching between {fmt(A)} and {fmt(B)}; matroid oracle is inconsistent"
            )
    for b, a in match_b.items():
        pi[a] = b
    return pi


def verify_matroid_axioms(independents: Iterable[int], ground: GroundSet | int) -> AxiomCheck:
    """Exhaustive check of non-emptiness, downward closure and exchange.

    Exchange is checked only for pairs with ``|J| = |I| + 1``; under downward
    closure that is equivalent to the general axiom.
    """
    n = ground if isinstance(ground, int) else ground.n
    if n > EXPLICIT_MAX_N:
        raise ScaleError(f"axiom verification is limited to n <= {EXPLICIT_MAX_N}")
    family = set(independents)
    if not family:
        return AxiomCheck(False, "family is empty")
    for s in sorted(family):
        for e in reversed(elements(s)):
            sub = s & ~(1 << e)
            if sub not in family:
                return AxiomCheck(
                    False, f"downward closure fails: {fmt(s)} is independent but {fmt(sub)} is not", (s, sub)
                )
    by_size: dict[int, list[int]] = {}
    for s in family:
        by_size.setdefault(popcount(s), []).append(s)
    for k in sorted(by_size):
        bigger = by_size.get(k + 1, [])
        for I in sorted(by_size[k]):
            for J in sorted(bigger):
                if not any((I | (1 << x)) in family for x in elements(J & ~I)):
                    return AxiomCheck(
                        False, f"exchange fails: no x in {fmt(J)} - {fmt(I)} extends {fmt(I)}", (I, J)
                    )
    return AxiomCheck(True)


def all_bases(m: Matroid, limit: int = 1_000_000) -> list[int]:
    """Every base, in lexicographic order of sorted element tuples."""
    elems = elements(m.ground_mask)
    r = m.rank
    if comb(len(elems), r) > limit:
        raise ScaleError(f"C({len(elems)}, {r}) exceeds the enumeration cap {limit}")
    out = []
    for combo in combinations(elems, r):
        mask = 0
        for e in combo:
            mask |= 1 << e
        if m._independent(mask):
            out.append(mask)
    return out
