"""Exact brute-force solver for small subset spaces.

Enumeration in lexicographic order with a first-wins argmin gives a fully
deterministic ground truth; the size cap is on C(N, k), not N, so small-k
instances of deep models remain enumerable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations

from .errors import SpaceTooLarge
from .masks import LayerMask, make_mask, mask_key

DEFAULT_CAP = 2_000_000


@dataclass
class OracleResult:
    mask: LayerMask
    loss: float
    enumerated: int
    table: list[tuple[str, float, float]] | None = field(default=None)

    def to_dict(self) -> dict:
        return {
            "mask_key": mask_key(self.mask),
            "removed": list(self.mask.removed),
            "depth": self.mask.depth,
            "loss": self.loss,
            "enumerated": self.enumerated,
            "table_rows": None if self.table is None else len(self.table),
        }

    def write_table(self, path) -> None:
        if self.table is None:
            raise ValueError("oracle was run without keep_table")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["mask_key", "loss", "delta"])
            for key, loss, delta in self.table:
                writer.writerow([key, repr(loss), repr(delta)])


def brute_force(objective, k: int, keep_table: bool = False, cap: int = DEFAULT_CAP) -> OracleResult:
    """Enumerate all C(N, k) masks and return the argmin (ties: first in lex order)."""
    depth = objective.depth
    n_subsets = math.comb(depth, k)
    if n_subsets > cap:
        raise SpaceTooLarge(n_subsets, cap)

    combos = list(combinations(range(depth), k))
    bulk = objective.bulk_losses(combos)
    if bulk is not None:
        base = float(bulk[0]) if k == 0 else float(objective.bulk_losses([()])[0])
        losses = [float(x) for x in bulk]
    else:
        base = objective.dense_baseline
        losses = [objective.evaluate(make_mask(depth, c)).loss for c in combos]

    best_idx = 0
    for i in range(1, len(losses)):
        if losses[i] < losses[best_idx]:
            best_idx = i
    table = None
    if keep_table:
        table = [
            (mask_key(make_mask(depth, c)), loss, loss - base) for c, loss in zip(combos, losses)
        ]
    return OracleResult(
        mask=make_mask(depth, combos[best_idx]),
        loss=losses[best_idx],
        enumerated=n_subsets,
        table=table,
    )


def loss_quantile(table, fraction: float) -> float:
    """Loss threshold at the given lower quantile of an oracle table.

    fraction 0.01 returns the loss of the ceil(0.01 * C)-th best subset, so
    "within the top 1%" means loss <= loss_quantile(table, 0.01).
    """
    losses = sorted(loss for _, loss, _ in table)
    rank = max(1, math.ceil(fraction * len(losses)))
    return losses[rank - 1]
