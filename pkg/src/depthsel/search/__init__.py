"""Search algorithms over fixed-cardinality removal masks."""

from .basic import beam, fast_block_select, greedy, one_shot
from .bo import HammingGP, bo, expected_improvement
from .cbo import cbo
from .config import ALGORITHMS, BoConfig, CboConfig, FbsConfig, GaConfig, SearchConfig
from .ga import ga
from .result import SearchResult, StepRecord
from .runner import run_search

__all__ = [
    "ALGORITHMS",
    "SearchConfig",
    "GaConfig",
    "BoConfig",
    "CboConfig",
    "FbsConfig",
    "SearchResult",
    "StepRecord",
    "run_search",
    "one_shot",
    "greedy",
    "beam",
    "ga",
    "bo",
    "cbo",
    "fast_block_select",
    "HammingGP",
    "expected_improvement",
]
