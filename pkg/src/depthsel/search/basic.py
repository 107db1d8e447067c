"""One-shot, greedy iterative, beam, and proxy-ranked selection."""

from __future__ import annotations

import logging

from ..masks import LayerMask, make_mask, mask_key
from .common import best_of, evaluate_candidates, rank_layers
from .result import StepRecord

log = logging.getLogger(__name__)


def one_shot(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Remove the k layers with the smallest individual removal deltas.

    The ranking costs one evaluation per layer (plus the dense baseline); the
    chosen set is then materialized prefix by prefix so the trajectory of the
    committed mask is traced like any iterative method's.
    """
    depth = objective.depth
    scores = objective.single_layer_scores()
    order = rank_layers(scores)
    steps = []
    mask = make_mask(depth, ())
    for j in range(1, k + 1):
        mask = make_mask(depth, order[:j])
        rec = objective.evaluate(mask)
        steps.append(StepRecord(step=j, candidates=1, best_key=rec.mask_key, best_loss=rec.loss))
    return mask, steps


def greedy(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Iterative deletion: commit the best single extension, k rounds."""
    depth = objective.depth
    current = make_mask(depth, ())
    steps = []
    for level in range(1, k + 1):
        candidates = [current.with_added(i) for i in current.kept()]
        scored = evaluate_candidates(objective, candidates)
        loss, current = best_of(scored)
        steps.append(
            StepRecord(step=level, candidates=len(scored), best_key=mask_key(current), best_loss=loss)
        )
    return current, steps


def beam(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Level-wise beam over subset size; width 1 reduces exactly to greedy."""
    depth = objective.depth
    width = cfg.beam_width
    frontier = [make_mask(depth, ())]
    best_mask, best_loss = frontier[0], None
    steps = []
    for level in range(1, k + 1):
        candidates = {m.with_added(i) for m in frontier for i in m.kept()}
        scored = evaluate_candidates(objective, candidates)
        ranked = sorted(scored, key=lambda lm: (lm[0], lm[1]))
        frontier = [m for _, m in ranked[:width]]
        best_loss, best_mask = ranked[0]
        steps.append(
            StepRecord(
                step=level, candidates=len(scored), best_key=mask_key(best_mask), best_loss=best_loss
            )
        )
    return best_mask, steps


def fast_block_select(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Rank layers by a cheap proxy instead of full-loss singles.

    Costs at most two full evaluations (dense baseline plus the final mask).
    Objectives without proxy support fall back to one-shot with a warning.
    """
    proxy = objective.proxy_scores(rng)
    if proxy is None:
        log.warning(
            "objective %s exposes no cheap proxy; falling back to one-shot ranking", objective.name
        )
        return one_shot(objective, k, cfg, rng)
    order = rank_layers(proxy)
    mask = make_mask(objective.depth, order[:k])
    rec = objective.evaluate(mask)
    steps = [StepRecord(step=1, candidates=objective.depth, best_key=rec.mask_key, best_loss=rec.loss)]
    return mask, steps
