"""Random streams for replicate-level reproducibility."""

import numpy as np

_TINY = 2.0**-54


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one replicate.

    The stream depends only on ``seed`` and ``key`` (e.g. ``(time_index, replicate)``),
    never on how replicates are scheduled across workers.
    """
    ss = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def open_uniform(rng: np.random.Generator, size=None):
    """Uniform variates strictly inside (0, 1).

    ``Generator.random`` already excludes 1; its (probability 2**-53) zero is lifted to 2**-54.
    """
    return np.maximum(rng.random(size), _TINY)
