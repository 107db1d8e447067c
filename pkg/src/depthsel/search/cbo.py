"""Constrained binary optimization over a sampled quadratic surrogate."""

from __future__ import annotations

import math

import numpy as np

from ..masks import LayerMask, make_mask, mask_key
from .common import best_of, top_k_mask
from .result import StepRecord


def cbo(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Fit q(S) = sum s_i + sum p_ij over sampled pairs, anneal, verify.

    Pair corrections p_ij = delta({i,j}) - delta({i}) - delta({j}) are
    measured for the pairs with the lowest single-score sums, up to the
    budget; unmeasured pairs count as zero. The surrogate is minimized under
    |S| = k by simulated annealing over single-swap moves with a geometric
    temperature schedule, and the true objective is then evaluated on the
    annealed minimizer plus the next-best distinct annealing candidates; the
    true-loss winner is returned.
    """
    depth = objective.depth
    if k == 0 or k == depth:
        mask = make_mask(depth, range(depth) if k else ())
        rec = objective.evaluate(mask)
        return mask, [StepRecord(step=1, candidates=1, best_key=rec.mask_key, best_loss=rec.loss)]

    steps = []
    base = objective.dense_baseline
    singles = np.asarray(objective.single_layer_scores(), dtype=np.float64)
    probe_best = min(
        [(base, make_mask(depth, ()))]
        + [(base + float(singles[i]), make_mask(depth, (i,))) for i in range(depth)],
        key=lambda lm: (lm[0], lm[1]),
    )
    steps.append(_step(1, depth, probe_best))

    all_pairs = sorted(
        ((i, j) for i in range(depth) for j in range(i + 1, depth)),
        key=lambda ij: (float(singles[ij[0]] + singles[ij[1]]), ij),
    )
    sampled = all_pairs[: cfg.cbo.pair_sample_budget]
    pair_matrix = np.zeros((depth, depth), dtype=np.float64)
    for i, j in sampled:
        pair = make_mask(depth, (i, j))
        joint_loss = objective.evaluate(pair).loss
        pair_matrix[i, j] = pair_matrix[j, i] = (joint_loss - base) - float(singles[i] + singles[j])
        probe_best = min(probe_best, (joint_loss, pair), key=lambda lm: (lm[0], lm[1]))
    steps.append(_step(2, len(sampled), probe_best))

    visited = _anneal(depth, k, singles, pair_matrix, cfg, rng)
    steps.append(_step(3, len(visited), probe_best))

    shortlist = sorted(visited.items(), key=lambda kv: (kv[1], kv[0]))
    shortlist = shortlist[: cfg.cbo.rescue_candidates + 1]
    scored = [(objective.evaluate(m).loss, m) for m, _ in shortlist]
    loss, mask = best_of(scored)
    steps.append(StepRecord(step=4, candidates=len(scored), best_key=mask_key(mask), best_loss=loss))
    return mask, steps


def _step(step: int, candidates: int, best: tuple[float, LayerMask]) -> StepRecord:
    return StepRecord(step=step, candidates=candidates, best_key=mask_key(best[1]), best_loss=best[0])


def _anneal(depth, k, singles, pair_matrix, cfg, rng) -> dict[LayerMask, float]:
    """Metropolis walk over swap neighbors of the surrogate; returns visited q values."""
    s = [float(v) for v in singles]
    pm = [[float(v) for v in row] for row in pair_matrix]

    def q_of(removed) -> float:
        total = 0.0
        for i in removed:
            total += s[i]
        for a in range(len(removed)):
            row = pm[removed[a]]
            for b in range(a + 1, len(removed)):
                total += row[removed[b]]
        return total

    removed = sorted(top_k_mask(depth, singles, k).removed)
    kept = [i for i in range(depth) if i not in set(removed)]
    q_cur = q_of(removed)
    spread = float(singles.max() - singles.min())
    temp = cfg.cbo.anneal_t0 if cfg.cbo.anneal_t0 is not None else (spread if spread > 0 else 1.0)
    visited = {tuple(removed): q_cur}

    steps = cfg.cbo.anneal_steps
    out_draws = rng.integers(0, k, size=steps)
    in_draws = rng.integers(0, depth - k, size=steps)
    accept_draws = rng.random(steps)
    for step in range(steps):
        oi = int(out_draws[step])
        ii = int(in_draws[step])
        out, inc = removed[oi], kept[ii]
        row_in, row_out = pm[inc], pm[out]
        dq = s[inc] - s[out]
        for o in removed:
            if o != out:
                dq += row_in[o] - row_out[o]
        proposal = tuple(sorted(removed[:oi] + removed[oi + 1 :] + [inc]))
        q_new = q_cur + dq
        if proposal not in visited:
            visited[proposal] = q_of(proposal)  # exact value; dq only steers the walk
        if dq <= 0 or (temp > 1e-300 and accept_draws[step] < math.exp(-dq / temp)):
            kept[ii] = out
            removed = list(proposal)
            q_cur = q_new
        temp *= cfg.cbo.anneal_alpha
    return {make_mask(depth, r): q for r, q in visited.items()}
