"""Dispatch a configured search and stamp its accounting."""

from __future__ import annotations

from ..errors import ConfigError, UnknownAlgorithm
from ..masks import make_mask
from ..seeding import derive_rng
from .basic import beam, fast_block_select, greedy, one_shot
from .bo import bo
from .cbo import cbo
from .config import SearchConfig
from .ga import ga
from .result import SearchResult

_DISPATCH = {
    "one-shot": one_shot,
    "greedy": greedy,
    "beam": beam,
    "ga": ga,
    "bo": bo,
    "cbo": cbo,
    "fast-block-select": fast_block_select,
}


def run_search(config: SearchConfig, objective, trace_path=None) -> SearchResult:
    """Run one algorithm against one objective.

    The per-run generator is derived from (seed, algorithm name), evaluation
    counts cover only cache misses attributed to this run, and the final loss
    is read back through the shared cache. When `trace_path` is given, the
    evaluation trace accumulated on the objective is written there as JSONL.
    """
    algorithm = _DISPATCH.get(config.algorithm)
    if algorithm is None:
        raise UnknownAlgorithm(f"no algorithm named {config.algorithm!r}")
    if config.k > objective.depth:
        raise ConfigError(f"budget k={config.k} exceeds depth {objective.depth}")

    rng = derive_rng(config.seed, config.algorithm)
    computed_before = objective.computed_evals
    trace_start = len(objective.trace)
    t0 = objective.clock.now_ms()

    objective.evaluate(make_mask(objective.depth, ()))  # dense baseline anchors every delta
    mask, steps = algorithm(objective, config.k, config, rng)
    final = objective.evaluate(mask)

    wall_ms = objective.clock.now_ms() - t0
    run_records = objective.trace[trace_start:]
    result = SearchResult(
        algorithm=config.algorithm,
        mask=mask,
        loss=final.loss,
        delta=final.delta,
        evaluations=objective.computed_evals - computed_before,
        distinct_masks=len({r.mask_key for r in run_records}),
        wall_ms=wall_ms,
        steps=steps,
        config=config.to_dict(),
    )
    if len(mask.removed) != config.k:
        raise RuntimeError(f"search returned infeasible mask {mask} for k={config.k}")
    if trace_path is not None:
        objective.write_trace(trace_path)
    return result
