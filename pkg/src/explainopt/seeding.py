"""Counter-based seed splitting.

Every random stream is addressed by ``(seed, *path)``, e.g. ``(seed, run, NOMINAL)``;
adding runs or records never shifts the draws of existing ones.
"""
from __future__ import annotations

from typing import Union

import numpy as np

NOMINAL = 0
HISTORY = 1
QUERY = 2
SUITE = 3

SeedLike = Union[int, np.random.Generator]


def rng_for(seed: int, *path: int) -> np.random.Generator:
    # the path goes into spawn_key: plain entropy lists ignore trailing zeros,
    # which would make (seed, run, 0) and (seed, run) the same stream
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(map(int, path)))))


def as_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return rng_for(seed)
