"""Loss families behind one cached evaluator interface."""

from __future__ import annotations

from ..errors import ConfigError
from ..timing import make_clock
from .base import LOSS_SENTINEL, EvalRecord, Objective
from .external import ExternalObjective, external_connect
from .landscape import LandscapeObjective, LandscapeSpec, generate_landscape, landscape_loss
from .toy import ToyModel, ToyModelConfig, ToyObjective

__all__ = [
    "LOSS_SENTINEL",
    "EvalRecord",
    "Objective",
    "ExternalObjective",
    "external_connect",
    "LandscapeObjective",
    "LandscapeSpec",
    "generate_landscape",
    "landscape_loss",
    "ToyModel",
    "ToyModelConfig",
    "ToyObjective",
    "build_objective",
]

_TOY_FIELDS = {
    "depth",
    "model_dim",
    "heads",
    "vocab",
    "context",
    "corpus_sequences",
    "task_items",
    "task_choices",
    "prompt_len",
    "completion_len",
    "init_std",
    "seed",
}


def build_objective(cfg: dict, clock_kind: str = "wall") -> Objective:
    """Construct an objective from its JSON configuration section."""
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    label = cfg.pop("label", None)
    eval_budget = cfg.pop("eval_budget", None)
    clock = make_clock(clock_kind)

    if kind == "landscape":
        if "path" in cfg:
            spec = LandscapeSpec.load(cfg.pop("path"))
        elif "spec" in cfg:
            spec = LandscapeSpec.from_dict(cfg.pop("spec"))
        elif "generate" in cfg:
            spec = generate_landscape(**cfg.pop("generate"))
        else:
            raise ConfigError("landscape objective needs one of: path, spec, generate")
        _reject_unknown(cfg, "landscape objective")
        return LandscapeObjective(spec, eval_budget=eval_budget, clock=clock, name=label)

    if kind in ("toy-perplexity", "toy-margin"):
        unknown = set(cfg) - _TOY_FIELDS
        if unknown:
            raise ConfigError(f"unknown toy objective fields: {sorted(unknown)}")
        model = ToyModel(ToyModelConfig(**cfg))
        metric = kind.removeprefix("toy-")
        return ToyObjective(model, metric, eval_budget=eval_budget, clock=clock, name=label)

    if kind == "external":
        endpoint = {key: cfg.pop(key) for key in ("cmd", "tcp", "timeout_s", "in_flight") if key in cfg}
        _reject_unknown(cfg, "external objective")
        return external_connect(endpoint, eval_budget=eval_budget, clock=clock, name=label)

    raise ConfigError(f"unknown objective kind {kind!r}")


def _reject_unknown(cfg: dict, where: str) -> None:
    if cfg:
        raise ConfigError(f"unknown {where} fields: {sorted(cfg)}")
