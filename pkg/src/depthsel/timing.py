"""Wall-clock vs. logical clocks.

Real timings (the default) are what you want for cost tables, but they make
output files differ between runs. The logical clock counts computed
evaluations instead: one tick per cache miss, so every duration in traces,
results and reports becomes a deterministic function of the run. Configs that
promise byte-identical re-runs should set clock="logical".
"""

from __future__ import annotations

import time


class WallClock:
    kind = "wall"

    def now_ms(self) -> float:
        return time.perf_counter() * 1000.0

    def tick(self) -> None:
        pass


class LogicalClock:
    """Monotone counter advanced once per computed evaluation."""

    kind = "logical"

    def __init__(self):
        self.ticks = 0

    def now_ms(self) -> float:
        return float(self.ticks)

    def tick(self) -> None:
        self.ticks += 1


def make_clock(kind: str):
    if kind == "wall":
        return WallClock()
    if kind == "logical":
        return LogicalClock()
    raise ValueError(f"unknown clock kind {kind!r}")
