"""Cached black-box evaluator interface.

Every objective maps a removal mask to a scalar loss. Evaluations are
memoized by canonical mask key, each mask is computed at most once even under
concurrent callers, and every call (hit or miss) is appended to a trace.
Non-finite model output is clamped to the largest finite float and flagged
"exploded" so failures sort as worst instead of poisoning comparisons.
"""

from __future__ import annotations

import json
import math
import sys
import threading
from dataclasses import asdict, dataclass

from ..errors import BudgetExhausted, DepthMismatch
from ..masks import LayerMask, make_mask, mask_key
from ..timing import WallClock

LOSS_SENTINEL = sys.float_info.max


@dataclass(frozen=True)
class EvalRecord:
    seq: int
    mask_key: str
    loss: float
    delta: float
    source: str  # "computed" | "cache-hit"
    wall_ms: float
    exploded: bool = False

    def trace_line(self) -> str:
        # Trace schema is fixed: (seq, mask_key, loss, delta, source, wall_ms).
        payload = {
            "seq": self.seq,
            "mask_key": self.mask_key,
            "loss": self.loss,
            "delta": self.delta,
            "source": self.source,
            "wall_ms": self.wall_ms,
        }
        return json.dumps(payload)


class Objective:
    """Base evaluator. Subclasses implement `_compute_loss(mask) -> float`.

    The dense baseline (empty-mask loss) is computed on first need and every
    delta is reported against it. `eval_budget`, when set, caps the number of
    computed (non-cached) evaluations.
    """

    kind = "abstract"

    def __init__(self, depth: int, eval_budget: int | None = None, clock=None, name: str | None = None):
        self.depth = depth
        self.eval_budget = eval_budget
        self.clock = clock if clock is not None else WallClock()
        self.name = name or self.kind
        self._cache: dict[str, tuple[float, bool]] = {}
        self._pending: dict[str, threading.Event] = {}
        self._lock = threading.Lock()
        self.trace: list[EvalRecord] = []
        self.computed_evals = 0
        self._singles: list[float] | None = None

    # -- core API ------------------------------------------------------------

    def _compute_loss(self, mask: LayerMask) -> float:
        raise NotImplementedError

    @property
    def dense_baseline(self) -> float:
        return self.evaluate(make_mask(self.depth, ())).loss

    def evaluate(self, mask: LayerMask) -> EvalRecord:
        if mask.depth != self.depth:
            raise DepthMismatch(f"mask depth {mask.depth} != objective depth {self.depth}")
        key = mask_key(mask)
        while True:
            with self._lock:
                if key in self._cache:
                    loss, exploded = self._cache[key]
                    return self._record(key, loss, exploded, "cache-hit", 0.0)
                event = self._pending.get(key)
                if event is None:
                    if self.eval_budget is not None and self.computed_evals >= self.eval_budget:
                        raise BudgetExhausted(
                            f"evaluation budget {self.eval_budget} exhausted before {key}"
                        )
                    self._pending[key] = threading.Event()
                    break
            # Another worker is computing this key; wait and re-check.
            event.wait()

        t0 = self.clock.now_ms()
        try:
            raw = self._compute_loss(mask)
        except BaseException:
            with self._lock:
                self._pending.pop(key).set()
            raise
        loss, exploded = _sanitize(raw)
        self.clock.tick()
        wall_ms = self.clock.now_ms() - t0
        with self._lock:
            self._cache[key] = (loss, exploded)
            self.computed_evals += 1
            self._pending.pop(key).set()
            return self._record(key, loss, exploded, "computed", wall_ms)

    def _record(self, key: str, loss: float, exploded: bool, source: str, wall_ms: float) -> EvalRecord:
        # Baseline is resolved lazily: deltas before it exists can only be
        # the baseline evaluation itself (delta 0 by definition).
        base = self._cache.get(mask_key(make_mask(self.depth, ())))
        delta = loss - base[0] if base is not None else 0.0
        rec = EvalRecord(
            seq=len(self.trace),
            mask_key=key,
            loss=loss,
            delta=delta,
            source=source,
            wall_ms=wall_ms,
            exploded=exploded,
        )
        self.trace.append(rec)
        return rec

    def delta(self, mask: LayerMask) -> float:
        base = self.dense_baseline
        return self.evaluate(mask).loss - base

    def single_layer_scores(self) -> list[float]:
        """Delta of each singleton removal; one evaluation per layer, cached."""
        if self._singles is None:
            base = self.dense_baseline
            self._singles = [
                self.evaluate(make_mask(self.depth, (i,))).loss - base for i in range(self.depth)
            ]
        return list(self._singles)

    def proxy_scores(self, rng) -> list[float] | None:
        """Cheap per-layer redundancy proxy, or None when unsupported."""
        return None

    def bulk_losses(self, removed_lists) -> "object | None":
        """Vectorized loss for many masks, bypassing cache and trace.

        Only exact closed-form objectives provide this; it must reproduce
        `_compute_loss` bit for bit. Used by the brute-force oracle.
        """
        return None

    # -- bookkeeping ----------------------------------------------------------

    def cache_hits(self) -> int:
        return sum(1 for r in self.trace if r.source == "cache-hit")

    def write_trace(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self.trace:
                fh.write(rec.trace_line() + "\n")

    def trace_records(self) -> list[dict]:
        return [asdict(r) for r in self.trace]


def _sanitize(raw: float) -> tuple[float, bool]:
    value = float(raw)
    if math.isfinite(value):
        return value, False
    return LOSS_SENTINEL, True
