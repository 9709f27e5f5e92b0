"""Bit-indexed subsets of a finite group's element indices."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator


def iter_bits(mask: int) -> Iterator[int]:
    """Yield the indices of the set bits of ``mask`` in increasing order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


@dataclass(frozen=True)
class ElementSet:
    """A subset of ``{0, ..., capacity - 1}`` stored as an integer bitmask."""

    capacity: int
    bits: int
    cardinality: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if self.bits < 0 or self.bits >> self.capacity:
            raise ValueError(f"bits {self.bits:#x} do not fit capacity {self.capacity}")
        object.__setattr__(self, "cardinality", self.bits.bit_count())

    @classmethod
    def from_indices(cls, capacity: int, indices: Iterable[int]) -> ElementSet:
        indices = list(indices)
        for i in indices:
            if not 0 <= i < capacity:
                raise ValueError(f"element index {i} out of range for group of order {capacity}")
        return cls(capacity, mask_of(indices))

    @classmethod
    def empty(cls, capacity: int) -> ElementSet:
        return cls(capacity, 0)

    @classmethod
    def full(cls, capacity: int) -> ElementSet:
        return cls(capacity, (1 << capacity) - 1)

    def indices(self) -> tuple[int, ...]:
        return tuple(iter_bits(self.bits))

    def is_empty(self) -> bool:
        return self.bits == 0

    def min(self) -> int:
        if not self.bits:
            raise ValueError("min() of an empty ElementSet")
        return (self.bits & -self.bits).bit_length() - 1

    def __len__(self) -> int:
        return self.cardinality

    def __iter__(self) -> Iterator[int]:
        return iter_bits(self.bits)

    def __contains__(self, index: object) -> bool:
        return isinstance(index, int) and 0 <= index < self.capacity and bool(self.bits >> index & 1)

    def _check(self, other: ElementSet) -> None:
        if other.capacity != self.capacity:
            raise ValueError(f"capacity mismatch: {self.capacity} vs {other.capacity}")

    def __and__(self, other: ElementSet) -> ElementSet:
        self._check(other)
        return ElementSet(self.capacity, self.bits & other.bits)

    def __or__(self, other: ElementSet) -> ElementSet:
        self._check(other)
        return ElementSet(self.capacity, self.bits | other.bits)

    def __sub__(self, other: ElementSet) -> ElementSet:
        self._check(other)
        return ElementSet(self.capacity, self.bits & ~other.bits)

    def issubset(self, other: ElementSet) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices())) + "}"
