"""Counter-based child seeds.

Every randomized component derives its generator from (master seed, string
tag, optional draw index) through a SHA-256 mix, so results do not depend on
process hash salts, import order, or which other components drew first.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_int(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:8], "little")


def child_seed_sequence(master_seed: int, *tags: str | int) -> np.random.SeedSequence:
    entropy = [int(master_seed) & 0xFFFFFFFFFFFFFFFF]
    for t in tags:
        entropy.append(_tag_int(t) if isinstance(t, str) else int(t) & 0xFFFFFFFFFFFFFFFF)
    return np.random.SeedSequence(entropy)


def derive_rng(master_seed: int, *tags: str | int) -> np.random.Generator:
    return np.random.default_rng(child_seed_sequence(master_seed, *tags))
