"""Element sets as Python integer bitmasks.

Bit ``i`` set means element ``i`` is in the set.  Python ints are unbounded,
so the same representation covers small and large ground sets.
"""
from __future__ import annotations

from typing import Iterable, Iterator


def to_mask(elements: Iterable[int]) -> int:
    mask = 0
    for e in elements:
        if e < 0:
            raise ValueError(f"negative element id {e}")
        mask |= 1 << e
    return mask


def elements(mask: int) -> list[int]:
    """Ascending element ids of ``mask``."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def iter_bits(mask: int) -> Iterator[int]:
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask: int) -> int:
    return mask.bit_count()


def submasks(mask: int) -> Iterator[int]:
    """All submasks of ``mask``, including 0 and ``mask`` itself (descending)."""
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def full_mask(n: int) -> int:
    return (1 << n) - 1


def fmt(mask: int) -> str:
    return "{" + ",".join(map(str, elements(mask))) + "}"
