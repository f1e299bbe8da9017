"""Seeded, stream-splittable random generators.

Every random draw in the package goes through :func:`make_rng` so runs are
reproducible from ``(seed, stream)``. The bit generator is PCG64 (128-bit
state, portable across platforms); streams come from ``SeedSequence``
spawn keys, so stream ``k`` of seed ``s`` never overlaps stream ``k + 1``.
"""

import numpy as np


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))
