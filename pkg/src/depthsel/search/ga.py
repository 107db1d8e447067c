"""Prior-guided genetic algorithm over fixed-cardinality removal sets."""

from __future__ import annotations

import math

from ..masks import LayerMask, make_mask, mask_key
from .common import prior_probs, sample_prior_mask
from .result import StepRecord


def ga(objective, k: int, cfg, rng) -> tuple[LayerMask, list[StepRecord]]:
    """Population search with union crossover and a size-repair operator.

    Members are initialized by sampling k layers without replacement with
    probability softmax(-delta_i / tau). Crossover takes the union of two
    uniformly chosen parents and repairs it back to k by dropping the worst
    single-score members; each gene then mutates into a random kept layer with
    the configured rate. Elites survive generations unmodified.
    """
    depth = objective.depth
    p = cfg.ga.population
    if k == 0 or k == depth or math.comb(depth, k) == 1:
        mask = make_mask(depth, range(depth)[:k] if k else ())
        rec = objective.evaluate(mask)
        return mask, [StepRecord(step=1, candidates=1, best_key=rec.mask_key, best_loss=rec.loss)]

    scores = objective.single_layer_scores()
    probs = prior_probs(scores, cfg.ga.prior_temperature)
    population = [sample_prior_mask(depth, k, probs, rng) for _ in range(p)]

    n_elites = math.ceil(cfg.ga.elitism_fraction * p)
    best_loss, best_mask = None, None
    steps = []
    for gen in range(1, cfg.ga.generations + 1):
        scored = []
        for member in population:
            scored.append((objective.evaluate(member).loss, member))
        ranked = sorted(scored, key=lambda lm: (lm[0], lm[1]))
        if best_loss is None or (ranked[0][0], ranked[0][1]) < (best_loss, best_mask):
            best_loss, best_mask = ranked[0]
        steps.append(
            StepRecord(step=gen, candidates=len(scored), best_key=mask_key(best_mask), best_loss=best_loss)
        )
        if gen == cfg.ga.generations:
            break
        elites = [m for _, m in ranked[:n_elites]]
        children = []
        while len(elites) + len(children) < p:
            pa = population[int(rng.integers(p))]
            pb = population[int(rng.integers(p))]
            child = _repair(set(pa.removed) | set(pb.removed), k, scores)
            child = _mutate(child, depth, k, cfg.ga.mutation_rate, rng)
            children.append(make_mask(depth, child))
        population = elites + children
    return best_mask, steps


def _repair(genes: set[int], k: int, scores) -> set[int]:
    """Resize a gene set to exactly k using single-score rank."""
    genes = set(genes)
    while len(genes) > k:
        # Drop the most expensive removal; ties drop the higher index so the
        # surviving set keeps the lowest indices.
        genes.remove(max(genes, key=lambda i: (scores[i], i)))
    if len(genes) < k:
        missing = sorted((i for i in range(len(scores)) if i not in genes), key=lambda i: (scores[i], i))
        for i in missing[: k - len(genes)]:
            genes.add(i)
    return genes


def _mutate(genes: set[int], depth: int, k: int, rate: float, rng) -> set[int]:
    """Per-gene swap into a uniformly random kept layer; cardinality preserved."""
    genes = set(genes)
    for gene in sorted(genes):
        if rng.random() < rate:
            kept = [i for i in range(depth) if i not in genes]
            swap_in = kept[int(rng.integers(len(kept)))]
            genes.remove(gene)
            genes.add(swap_in)
    return genes
