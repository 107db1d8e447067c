"""Statistics and the sweep harness.

Rank correlations between calibration losses, inter-method variance,
mask-overlap measures, contiguity of removal patterns, and the grid runner
that produces them. Every derived number is a pure function of the stored
grid, so a report can be recomputed bitwise from its cells alone.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, DepthMismatch
from .masks import LayerMask, make_mask
from .objectives import build_objective
from .search import SearchConfig, run_search

log = logging.getLogger(__name__)


# -- scalar statistics ----------------------------------------------------------


def average_ranks(values) -> list[float]:
    """1-based ranks; tied values share the mean of their rank positions."""
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j) / 2.0 + 1.0
        for t in range(i, j + 1):
            ranks[order[t]] = shared
        i = j + 1
    return ranks


def spearman(xs, ys) -> float | None:
    """Rank correlation via Pearson on average ranks.

    Returns None (an explicit undefined flag, never a silent zero) when either
    input is constant.
    """
    xs, ys = list(xs), list(ys)
    if len(xs) != len(ys):
        raise ValueError("inputs must have equal length")
    if len(xs) < 2:
        raise ValueError("need at least two observations")
    for v in xs + ys:
        if not math.isfinite(float(v)):
            raise ValueError("inputs must be finite")
    if min(xs) == max(xs) or min(ys) == max(ys):
        return None
    rx = average_ranks(xs)
    ry = average_ranks(ys)
    mean_x = sum(rx) / len(rx)
    mean_y = sum(ry) / len(ry)
    cov = sum((a - mean_x) * (b - mean_y) for a, b in zip(rx, ry))
    var_x = sum((a - mean_x) ** 2 for a in rx)
    var_y = sum((b - mean_y) ** 2 for b in ry)
    rho = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, rho))


def inter_method_variance(values) -> float:
    """Population variance (divide by n)."""
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ValueError("need at least two values")
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def jaccard(a: LayerMask, b: LayerMask) -> float:
    """|A intersect B| / |A union B|; two empty sets count as identical."""
    if a.depth != b.depth:
        raise DepthMismatch(f"jaccard over depths {a.depth} and {b.depth}")
    sa, sb = set(a.removed), set(b.removed)
    union = sa | sb
    if not union:
        return 1.0
    return len(sa & sb) / len(union)


def contiguity(mask: LayerMask) -> tuple[int, int]:
    """(number of maximal runs of consecutive removed indices, longest run)."""
    runs = 0
    longest = 0
    current = 0
    prev = None
    for i in mask.removed:
        if prev is None or i != prev + 1:
            runs += 1
            current = 1
        else:
            current += 1
        longest = max(longest, current)
        prev = i
    return runs, longest


# -- sweep harness ----------------------------------------------------------------


@dataclass
class SweepPlan:
    """Grid definition: objectives x algorithms x budgets x seeds."""

    objectives: list[dict]
    algorithms: list[str]
    ks: list[int]
    seeds: list[int]
    search: dict = field(default_factory=dict)  # shared SearchConfig overrides
    clock: str = "wall"

    def __post_init__(self):
        labels = [self.label_of(i) for i in range(len(self.objectives))]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"objective labels must be unique, got {labels}")
        if not self.objectives or not self.algorithms or not self.ks or not self.seeds:
            raise ConfigError("sweep needs at least one objective, algorithm, k, and seed")

    def label_of(self, index: int) -> str:
        cfg = self.objectives[index]
        return cfg.get("label") or cfg.get("kind", f"objective{index}")

    def to_dict(self) -> dict:
        return {
            "objectives": self.objectives,
            "algorithms": self.algorithms,
            "ks": self.ks,
            "seeds": self.seeds,
            "search": self.search,
            "clock": self.clock,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SweepPlan":
        known = {"objectives", "algorithms", "ks", "seeds", "search", "clock"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SweepReport:
    depth: int
    plan: dict
    cells: list[dict]
    derived: dict

    def to_dict(self) -> dict:
        return {"depth": self.depth, "plan": self.plan, "cells": self.cells, "derived": self.derived}


def cell_id(objective_label: str, algorithm: str, k: int, seed: int) -> str:
    return f"{objective_label}__{algorithm}__k{k}__s{seed}"


def _run_cell(plan: SweepPlan, obj_index: int, algorithm: str, k: int, seed: int, cross_evaluators) -> dict:
    label = plan.label_of(obj_index)
    ident = {"objective": label, "algorithm": algorithm, "k": k, "seed": seed}
    try:
        objective = build_objective(plan.objectives[obj_index], clock_kind=plan.clock)
        cfg = SearchConfig.from_dict({**plan.search, "algorithm": algorithm, "k": k, "seed": seed})
        result = run_search(cfg, objective)
        cross = {}
        for other_label, evaluator in cross_evaluators.items():
            if other_label == label:
                cross[other_label] = result.loss
            else:
                cross[other_label] = evaluator.evaluate(result.mask).loss
        runs, max_run = contiguity(result.mask)
        cell = dict(ident)
        cell.update(
            {
                "ok": True,
                "error": None,
                "mask_key": str(result.mask),
                "removed": list(result.mask.removed),
                "loss": result.loss,
                "delta": result.delta,
                "evaluations": result.evaluations,
                "distinct_masks": result.distinct_masks,
                "wall_ms": result.wall_ms,
                "contiguity": {"runs": runs, "max_run": max_run},
                "cross_losses": cross,
            }
        )
        return cell
    except Exception as exc:  # flagged, never aborts the grid
        log.warning("sweep cell %s failed: %s", cell_id(label, algorithm, k, seed), exc)
        cell = dict(ident)
        cell.update({"ok": False, "error": f"{type(exc).__name__}: {exc}"})
        return cell


def build_sweep(plan: SweepPlan, out_dir=None, resume: bool = False, workers: int = 1) -> SweepReport:
    """Run the full grid (optionally resuming from stored cells) and derive stats."""
    labels = [plan.label_of(i) for i in range(len(plan.objectives))]
    cross_evaluators = {
        label: build_objective(cfg, clock_kind=plan.clock)
        for label, cfg in zip(labels, plan.objectives)
    }
    depths = {obj.depth for obj in cross_evaluators.values()}
    if len(depths) != 1:
        raise ConfigError(f"all sweep objectives must share one depth, got {sorted(depths)}")
    depth = depths.pop()
    for k in plan.ks:
        if k > depth:
            raise ConfigError(f"budget k={k} exceeds depth {depth}")

    cells_dir = None
    if out_dir is not None:
        cells_dir = Path(out_dir) / "cells"
        cells_dir.mkdir(parents=True, exist_ok=True)

    grid = [
        (i, algorithm, k, seed)
        for i in range(len(plan.objectives))
        for algorithm in plan.algorithms
        for k in plan.ks
        for seed in plan.seeds
    ]

    def run_one(task):
        i, algorithm, k, seed = task
        ident = cell_id(plan.label_of(i), algorithm, k, seed)
        if cells_dir is not None and resume:
            path = cells_dir / f"{ident}.json"
            if path.exists():
                try:
                    stored = json.loads(path.read_text(encoding="utf-8"))
                    if stored.get("ok") is not None:
                        return stored
                except (json.JSONDecodeError, OSError):
                    log.warning("discarding unreadable cell %s", path)
        cell = _run_cell(plan, i, algorithm, k, seed, cross_evaluators)
        if cells_dir is not None:
            path = cells_dir / f"{ident}.json"
            path.write_text(json.dumps(cell, indent=2) + "\n", encoding="utf-8")
        return cell

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(run_one, grid))
    else:
        cells = [run_one(t) for t in grid]

    cells = sort_cells(cells)
    derived = derive_statistics(depth, cells)
    return SweepReport(depth=depth, plan=plan.to_dict(), cells=cells, derived=derived)


def sort_cells(cells: list[dict]) -> list[dict]:
    return sorted(cells, key=lambda c: (c["objective"], c["algorithm"], c["k"], c["seed"]))


def derive_statistics(depth: int, cells: list[dict]) -> dict:
    """All derived report statistics, recomputable from the grid alone."""
    ok_cells = [c for c in cells if c.get("ok")]
    labels = sorted({c["objective"] for c in cells})
    conditions = sorted({(c["objective"], c["k"], c["seed"]) for c in ok_cells})

    variance_rows = []
    jaccard_rows = []
    for objective, k, seed in conditions:
        group = [c for c in ok_cells if (c["objective"], c["k"], c["seed"]) == (objective, k, seed)]
        group = sorted(group, key=lambda c: c["algorithm"])
        if len(group) >= 2:
            variance_rows.append(
                {
                    "objective": objective,
                    "k": k,
                    "seed": seed,
                    "n": len(group),
                    "variance": inter_method_variance([c["loss"] for c in group]),
                }
            )
        matrix = {}
        for a in group:
            row = {}
            for b in group:
                row[b["algorithm"]] = jaccard(
                    make_mask(depth, a["removed"]), make_mask(depth, b["removed"])
                )
            matrix[a["algorithm"]] = row
        jaccard_rows.append(
            {"objective": objective, "k": k, "seed": seed, "matrix": matrix}
        )

    rank_corr_rows = []
    for pruned_under in labels:
        for other in labels:
            if other == pruned_under:
                continue
            for k, seed in sorted({(c["k"], c["seed"]) for c in ok_cells}):
                group = [
                    c
                    for c in ok_cells
                    if (c["objective"], c["k"], c["seed"]) == (pruned_under, k, seed)
                    and other in c.get("cross_losses", {})
                ]
                group = sorted(group, key=lambda c: c["algorithm"])
                if len(group) < 2:
                    continue
                own = [c["loss"] for c in group]
                cross = [c["cross_losses"][other] for c in group]
                rho = spearman(own, cross)
                rank_corr_rows.append(
                    {
                        "pruned_under": pruned_under,
                        "eval_other": other,
                        "k": k,
                        "seed": seed,
                        "n": len(group),
                        "rho": rho,
                    }
                )

    cross_jaccard_rows = []
    for ia in range(len(labels)):
        for ib in range(ia + 1, len(labels)):
            la, lb = labels[ia], labels[ib]
            pairs = sorted(
                {(c["algorithm"], c["k"], c["seed"]) for c in ok_cells if c["objective"] in (la, lb)}
            )
            for algorithm, k, seed in pairs:
                cell_a = _find(ok_cells, la, algorithm, k, seed)
                cell_b = _find(ok_cells, lb, algorithm, k, seed)
                if cell_a is None or cell_b is None:
                    continue
                cross_jaccard_rows.append(
                    {
                        "objective_a": la,
                        "objective_b": lb,
                        "algorithm": algorithm,
                        "k": k,
                        "seed": seed,
                        "jaccard": jaccard(
                            make_mask(depth, cell_a["removed"]), make_mask(depth, cell_b["removed"])
                        ),
                    }
                )

    timing_rows = [
        {
            "objective": c["objective"],
            "algorithm": c["algorithm"],
            "k": c["k"],
            "seed": c["seed"],
            "wall_ms": c["wall_ms"],
            "evaluations": c["evaluations"],
            "distinct_masks": c["distinct_masks"],
        }
        for c in ok_cells
    ]

    return {
        "rank_corr": rank_corr_rows,
        "variance": variance_rows,
        "jaccard": jaccard_rows,
        "cross_jaccard": cross_jaccard_rows,
        "timing": timing_rows,
    }


def _find(cells, objective, algorithm, k, seed):
    for c in cells:
        if (c["objective"], c["algorithm"], c["k"], c["seed"]) == (objective, algorithm, k, seed):
            return c
    return None


# -- report bundle ------------------------------------------------------------------


def export_pruning_map(report: SweepReport, path) -> None:
    """0/1 matrix of pruned layers: one row per grid cell, one column per layer."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["objective", "algorithm", "k", "seed"] + [f"layer_{i}" for i in range(report.depth)]
        )
        for c in report.cells:
            if not c.get("ok"):
                continue
            removed = set(c["removed"])
            writer.writerow(
                [c["objective"], c["algorithm"], c["k"], c["seed"]]
                + [1 if i in removed else 0 for i in range(report.depth)]
            )


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report_bundle(report: SweepReport, out_dir) -> list[str]:
    """Write report.json plus the four CSV exports; returns the file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
    )
    export_pruning_map(report, out / "pruning_map.csv")

    with open(out / "rank_corr.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pruned_under", "eval_other", "k", "seed", "n", "spearman_rho"])
        for row in report.derived["rank_corr"]:
            writer.writerow(
                [row["pruned_under"], row["eval_other"], row["k"], row["seed"], row["n"], _fmt(row["rho"])]
            )

    with open(out / "variance.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["objective", "k", "seed", "n", "variance"])
        for row in report.derived["variance"]:
            writer.writerow([row["objective"], row["k"], row["seed"], row["n"], _fmt(row["variance"])])

    with open(out / "timing.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["objective", "algorithm", "k", "seed", "wall_ms", "evaluations", "distinct_masks"])
        for row in report.derived["timing"]:
            writer.writerow(
                [
                    row["objective"],
                    row["algorithm"],
                    row["k"],
                    row["seed"],
                    _fmt(row["wall_ms"]),
                    row["evaluations"],
                    row["distinct_masks"],
                ]
            )
    return ["report.json", "pruning_map.csv", "rank_corr.csv", "variance.csv", "timing.csv"]
