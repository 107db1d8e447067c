"""Layer-removal masks and their canonical operations.

A mask names the removed blocks of an N-block network as a sorted tuple of
0-based indices. Masks are immutable values: every operation returns a new
mask, so they can be shared freely between concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import EmptyNeighborhood, IndexOutOfRange


@dataclass(frozen=True, order=True)
class LayerMask:
    """An immutable removal set over a model of `depth` blocks.

    `removed` is strictly ascending with no duplicates; use `make_mask` to
    normalize raw input. Ordering is (depth, removed), so sorting masks of a
    shared depth yields lexicographic subset order with lowest indices first.
    """

    depth: int
    removed: tuple[int, ...] = ()

    @property
    def k(self) -> int:
        return len(self.removed)

    def kept(self) -> tuple[int, ...]:
        gone = set(self.removed)
        return tuple(i for i in range(self.depth) if i not in gone)

    def keep_vector(self) -> list[int]:
        """0/1 vector of length depth; 1 means the block stays."""
        vec = [1] * self.depth
        for i in self.removed:
            vec[i] = 0
        return vec

    def bits(self) -> int:
        """Removed set packed as an integer bitboard (bit i = removed)."""
        acc = 0
        for i in self.removed:
            acc |= 1 << i
        return acc

    def with_added(self, index: int) -> "LayerMask":
        return make_mask(self.depth, self.removed + (index,))

    def __str__(self) -> str:
        return mask_key(self)


def make_mask(depth: int, removed: Iterable[int]) -> LayerMask:
    """Build a normalized mask: sorted, deduplicated, range-checked.

    Rejects (never clamps) indices outside [0, depth).
    """
    if depth < 1:
        raise IndexOutOfRange(f"depth must be >= 1, got {depth}")
    indices = sorted(set(int(i) for i in removed))
    for i in indices:
        if i < 0 or i >= depth:
            raise IndexOutOfRange(f"layer index {i} outside [0, {depth})")
    return LayerMask(depth=int(depth), removed=tuple(indices))


def mask_key(mask: LayerMask) -> str:
    """Canonical text key "N:i1,i2,...,ik"; empty removal set is "N:"."""
    return f"{mask.depth}:" + ",".join(str(i) for i in mask.removed)


def mask_from_key(key: str) -> LayerMask:
    """Inverse of `mask_key`; rejects malformed keys."""
    head, _, tail = key.partition(":")
    try:
        depth = int(head)
    except ValueError as exc:
        raise IndexOutOfRange(f"bad mask key {key!r}") from exc
    if tail == "":
        return make_mask(depth, ())
    try:
        removed = [int(t) for t in tail.split(",")]
    except ValueError as exc:
        raise IndexOutOfRange(f"bad mask key {key!r}") from exc
    return make_mask(depth, removed)


def cardinality_neighbors(mask: LayerMask) -> list[LayerMask]:
    """All masks reachable by swapping one removed index for one kept index.

    Exactly k*(N-k) masks, in canonical (sorted) order. Requires 0 < k < N;
    the empty and the full mask have no cardinality-preserving moves.
    """
    k = mask.k
    if k == 0 or k == mask.depth:
        raise EmptyNeighborhood(f"mask {mask_key(mask)} has no swap neighbors")
    kept = mask.kept()
    out = []
    for drop in mask.removed:
        rest = tuple(i for i in mask.removed if i != drop)
        for add in kept:
            out.append(LayerMask(mask.depth, tuple(sorted(rest + (add,)))))
    out.sort()
    return out


def enumerate_masks(depth: int, k: int) -> Iterator[LayerMask]:
    """All k-subsets of [0, depth) in lexicographic order."""
    from itertools import combinations

    for combo in combinations(range(depth), k):
        yield LayerMask(depth, combo)


@dataclass(frozen=True)
class Budget:
    """Number of layers to remove; validated against a depth before use."""

    k: int

    def __post_init__(self):
        if self.k < 0:
            raise IndexOutOfRange(f"budget must be non-negative, got {self.k}")

    def check(self, depth: int) -> int:
        if self.k > depth:
            raise IndexOutOfRange(f"budget {self.k} exceeds depth {depth}")
        return self.k
