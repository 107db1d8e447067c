"""Search configuration with the published defaults."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from ..errors import ConfigError

ALGORITHMS = ("one-shot", "greedy", "beam", "ga", "bo", "cbo", "fast-block-select")


@dataclass
class GaConfig:
    population: int = 16
    elitism_fraction: float = 0.2
    mutation_rate: float = 0.15
    generations: int = 10
    prior_temperature: float | None = None  # None: std of the single-layer scores


@dataclass
class BoConfig:
    trials: int = 200
    random_inits: int = 10
    surrogate_noise: float = 1e-6
    candidate_pool: int = 64  # fresh prior samples added to the neighbor pool per trial
    length_scale: float = 2.0


@dataclass
class CboConfig:
    pair_sample_budget: int = 64
    anneal_steps: int = 2000
    anneal_t0: float | None = None  # None: spread of the single-layer scores
    anneal_alpha: float = 0.995
    rescue_candidates: int = 5


@dataclass
class FbsConfig:
    proxy: str = "auto"


@dataclass
class SearchConfig:
    algorithm: str = "greedy"
    k: int = 0
    seed: int = 0
    beam_width: int = 5
    ga: GaConfig = field(default_factory=GaConfig)
    bo: BoConfig = field(default_factory=BoConfig)
    cbo: CboConfig = field(default_factory=CboConfig)
    fbs: FbsConfig = field(default_factory=FbsConfig)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.k < 0:
            raise ConfigError("k must be non-negative")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")
        if self.ga.population < 2:
            raise ConfigError("ga.population must be >= 2")
        if not (0 <= self.ga.elitism_fraction < 1):
            raise ConfigError("ga.elitism_fraction must be in [0, 1)")
        if not (0 <= self.ga.mutation_rate <= 1):
            raise ConfigError("ga.mutation_rate must be in [0, 1]")
        if self.bo.trials < self.bo.random_inits:
            raise ConfigError("bo.trials must be >= bo.random_inits")
        if self.cbo.pair_sample_budget < 0:
            raise ConfigError("cbo.pair_sample_budget must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        data = dict(data)
        nested = {}
        for key, sub_cls in (("ga", GaConfig), ("bo", BoConfig), ("cbo", CboConfig), ("fbs", FbsConfig)):
            if key in data:
                sub = data.pop(key)
                unknown = set(sub) - {f.name for f in sub_cls.__dataclass_fields__.values()}
                if unknown:
                    raise ConfigError(f"unknown search.{key} fields: {sorted(unknown)}")
                nested[key] = sub_cls(**sub)
        known = {f.name for f in cls.__dataclass_fields__.values()}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown search fields: {sorted(unknown)}")
        return cls(**data, **nested)
