"""Counter-based per-sample random streams.

Sample i of an ensemble always draws from SeedSequence(seed, spawn_key=(i,)),
so results do not depend on how samples are split across workers.
"""
from __future__ import annotations

import numpy as np

_SEED_MASK = (1 << 64) - 1


def master_entropy(seed: int) -> int:
    # SeedSequence needs a non-negative entropy; negative 64-bit seeds wrap.
    return int(seed) & _SEED_MASK


def sample_rng(seed: int, sample_index: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_entropy(seed), spawn_key=(int(sample_index), int(stream)))
    return np.random.Generator(np.random.PCG64(ss))
