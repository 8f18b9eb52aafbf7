"""Integer partitions (Young diagrams) with arm/leg geometry.

Diagrams use English convention with 1-based (row, column) cells. A partition
stores its parts together with the conjugate so that arm and leg lookups are
constant time.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

MAX_WEIGHT_DEFAULT = 16


class CapacityError(ValueError):
    """Raised when an enumeration beyond the configured weight bound is requested."""


@dataclass(frozen=True, order=True)
class Partition:
    parts: tuple[int, ...]
    conjugate_parts: tuple[int, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        if any(p <= 0 for p in parts):
            raise ValueError(f"parts must be positive: {parts}")
        if any(parts[i] < parts[i + 1] for i in range(len(parts) - 1)):
            raise ValueError(f"parts must be weakly decreasing: {parts}")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "conjugate_parts", _conjugate(parts))

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def row(self, i: int) -> int:
        """Length of row i (1-based), zero beyond the diagram."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def col(self, j: int) -> int:
        """Length of column j (1-based), zero beyond the diagram."""
        c = self.conjugate_parts
        return c[j - 1] if 1 <= j <= len(c) else 0

    def conjugate(self) -> "Partition":
        return Partition(self.conjugate_parts)

    def cells(self):
        for i, p in enumerate(self.parts, start=1):
            for j in range(1, p + 1):
                yield (i, j)

    def __contains__(self, cell) -> bool:
        i, j = cell
        return i >= 1 and j >= 1 and j <= self.row(i)

    def __str__(self) -> str:
        return "[" + ",".join(map(str, self.parts)) + "]"


def _conjugate(parts: tuple[int, ...]) -> tuple[int, ...]:
    if not parts:
        return ()
    return tuple(sum(1 for p in parts if p >= j) for j in range(1, parts[0] + 1))


EMPTY = Partition(())


def arm_leg(lam: Partition, mu: Partition, cell: tuple[int, int]) -> tuple[int, int]:
    """Return (a_mu(s), l_lam(s)) = (mu_i - j, lam'_j - i) for a cell s=(i,j) of lam."""
    if cell not in lam:
        raise ValueError(f"cell {cell} lies outside partition {lam}")
    i, j = cell
    return mu.row(i) - j, lam.col(j) - i


def _partitions_of(n: int, largest: int):
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions_of(n - first, first):
            yield (first,) + rest


_memo: dict[int, list[Partition]] = {}
_memo_lock = threading.Lock()
_max_weight = MAX_WEIGHT_DEFAULT


def set_max_weight(bound: int) -> None:
    """Change the capacity bound used by :func:`enumerate_partitions`."""
    global _max_weight
    _max_weight = int(bound)


def enumerate_partitions(max_weight: int) -> dict[int, list[Partition]]:
    """All partitions of each weight 0..max_weight, lexicographically descending."""
    if max_weight < 0:
        raise ValueError("max_weight must be nonnegative")
    if max_weight > _max_weight:
        raise CapacityError(f"max_weight {max_weight} exceeds configured bound {_max_weight}")
    missing = [w for w in range(max_weight + 1) if w not in _memo]
    if missing:
        with _memo_lock:
            for w in missing:
                if w not in _memo:
                    _memo[w] = [Partition(p) for p in _partitions_of(w, w)]
    return {w: list(_memo[w]) for w in range(max_weight + 1)}


def partition_pairs(weight: int) -> list[tuple[Partition, Partition]]:
    """All ordered pairs (lam1, lam2) with |lam1|+|lam2| = weight."""
    table = enumerate_partitions(weight)
    return [(l1, l2) for w in range(weight + 1) for l1 in table[w] for l2 in table[weight - w]]
