"""Helpers shared by the search algorithms.

Selection is always deterministic: score ties between layers break toward the
lowest index, ties between masks break toward the canonically smaller removal
tuple, and candidate sets are processed in canonical mask order so outcomes
never depend on evaluation completion order.
"""

from __future__ import annotations

import logging

import numpy as np

from ..masks import LayerMask, make_mask

log = logging.getLogger(__name__)


def rank_layers(scores) -> list[int]:
    """Layer indices sorted by (score ascending, index ascending)."""
    return [i for _, i in sorted((float(s), i) for i, s in enumerate(scores))]


def top_k_mask(depth: int, scores, k: int) -> LayerMask:
    return make_mask(depth, rank_layers(scores)[:k])


def prior_probs(scores, temperature: float | None) -> np.ndarray:
    """softmax(-score / tau) over layers; flat when the scores carry no signal."""
    s = np.asarray(scores, dtype=np.float64)
    n = len(s)
    spread = float(np.std(s))
    tau = float(temperature) if temperature is not None else spread
    if not np.isfinite(tau) or tau <= 0.0 or spread == 0.0:
        if spread == 0.0:
            log.warning("degenerate single-layer prior (no spread); using a uniform prior")
        return np.full(n, 1.0 / n)
    z = -(s - s.min()) / tau
    p = np.exp(z)
    p = p + 1e-300  # keep every layer reachable after underflow
    return p / p.sum()


def sample_prior_masks(
    depth: int, k: int, probs: np.ndarray, rng: np.random.Generator, count: int
) -> list[LayerMask]:
    """Draw `count` masks of k layers without replacement, proportional to probs.

    Uses the Gumbel-top-k construction, which realizes exactly the sequential
    renormalized draw but vectorizes over whole batches.
    """
    if k == 0:
        return [LayerMask(depth, ())] * count
    keys = np.log(probs)[None, :] + rng.gumbel(size=(count, depth))
    top = np.argpartition(-keys, k - 1, axis=1)[:, :k]
    return [LayerMask(depth, tuple(sorted(row.tolist()))) for row in top]


def sample_prior_mask(depth: int, k: int, probs: np.ndarray, rng: np.random.Generator) -> LayerMask:
    return sample_prior_masks(depth, k, probs, rng, 1)[0]


def evaluate_candidates(objective, masks) -> list[tuple[float, LayerMask]]:
    """Evaluate masks in canonical order; return (loss, mask) pairs in that order."""
    ordered = sorted(set(masks))
    return [(objective.evaluate(m).loss, m) for m in ordered]


def best_of(scored) -> tuple[float, LayerMask]:
    """Minimum by (loss, canonical mask order)."""
    return min(scored, key=lambda lm: (lm[0], lm[1]))
