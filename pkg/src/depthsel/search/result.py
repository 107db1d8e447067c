"""Search outcome record and its serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..masks import LayerMask, mask_key


@dataclass
class StepRecord:
    step: int
    candidates: int
    best_key: str
    best_loss: float

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "candidates": self.candidates,
            "best_key": self.best_key,
            "best_loss": self.best_loss,
        }


@dataclass
class SearchResult:
    algorithm: str
    mask: LayerMask
    loss: float
    delta: float
    evaluations: int  # computed (non-cache-hit) evaluations attributed to this run
    distinct_masks: int
    wall_ms: float
    steps: list[StepRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "mask_key": mask_key(self.mask),
            "removed": list(self.mask.removed),
            "depth": self.mask.depth,
            "loss": self.loss,
            "delta": self.delta,
            "evaluations": self.evaluations,
            "distinct_masks": self.distinct_masks,
            "wall_ms": self.wall_ms,
            "steps": [s.to_dict() for s in self.steps],
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_steps(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for s in self.steps:
                fh.write(json.dumps(s.to_dict()) + "\n")
