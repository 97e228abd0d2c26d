"""Subsets of a ground set, stored as integer bitmasks.

Bit ``i`` of a mask is set when element ``i`` belongs to the subset. The
engine works on plain ints (and int64 arrays for batched sweeps);
:class:`SubsetMask` is the public, hashable wrapper handed back to callers.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Iterable

import numpy as np

__all__ = [
    "SubsetMask",
    "mask_from_indices",
    "indices_from_mask",
    "popcount",
    "masks_of_size",
    "unrank_combination",
    "MAX_BATCH_GROUND",
]

# int64 masks are used for vectorised sweeps.
MAX_BATCH_GROUND = 62


@dataclass(frozen=True, order=True)
class SubsetMask:
    """A subset of ``range(ground_size)``."""

    bits: frozenset[int]
    ground_size: int

    def __post_init__(self):
        if self.ground_size < 0:
            raise ValueError("ground_size must be non-negative")
        for i in self.bits:
            if not 0 <= i < self.ground_size:
                raise ValueError(
                    f"index {i} outside ground set of size {self.ground_size}")

    @classmethod
    def from_indices(cls, indices: Iterable[int], ground_size: int) -> "SubsetMask":
        return cls(frozenset(int(i) for i in indices), int(ground_size))

    @classmethod
    def from_int(cls, mask: int, ground_size: int) -> "SubsetMask":
        return cls(frozenset(indices_from_mask(mask)), int(ground_size))

    @classmethod
    def full(cls, ground_size: int) -> "SubsetMask":
        return cls(frozenset(range(ground_size)), ground_size)

    @property
    def alpha(self) -> int:
        return len(self.bits)

    @property
    def mask(self) -> int:
        return mask_from_indices(self.bits)

    def complement(self) -> "SubsetMask":
        return SubsetMask(frozenset(range(self.ground_size)) - self.bits,
                          self.ground_size)

    def indices(self) -> list[int]:
        return sorted(self.bits)

    def __len__(self):
        return len(self.bits)

    def __iter__(self):
        return iter(self.indices())

    def __contains__(self, i):
        return i in self.bits


def mask_from_indices(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def indices_from_mask(mask: int) -> list[int]:
    out = []
    i = 0
    mask = int(mask)
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def _popcount_array(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64, copy=True)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return count


@lru_cache(maxsize=64)
def _mask_table(ground_size: int) -> tuple[np.ndarray, ...]:
    all_masks = np.arange(1 << ground_size, dtype=np.int64)
    pc = _popcount_array(all_masks)
    groups = tuple(all_masks[pc == a] for a in range(ground_size + 1))
    for g in groups:
        g.setflags(write=False)
    return groups


def masks_of_size(ground_size: int, alpha: int) -> np.ndarray:
    """All masks with ``alpha`` set bits, ascending by integer value.

    Only for ground sets small enough to enumerate (``ground_size <= 26``).
    """
    if not 0 <= alpha <= ground_size:
        raise ValueError(f"alpha={alpha} outside [0, {ground_size}]")
    if ground_size > 26:
        raise ValueError("ground set too large to enumerate every subset")
    return _mask_table(ground_size)[alpha]


def unrank_combination(rank: int, ground_size: int, alpha: int) -> int:
    """Mask of the ``rank``-th size-``alpha`` subset in colexicographic order."""
    mask = 0
    r = int(rank)
    for j in range(alpha, 0, -1):
        # largest c with comb(c, j) <= r
        c = j - 1
        while comb(c + 1, j) <= r:
            c += 1
        r -= comb(c, j)
        mask |= 1 << c
    if mask >> ground_size:
        raise ValueError("rank out of range")
    return mask
