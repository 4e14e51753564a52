"""Reproducible random streams.

Every stochastic routine takes an explicit ``numpy.random.Generator``.  The
helpers here build Philox (counter-based) generators from a seed and split
them into independent substreams with ``SeedSequence.spawn``, so that the
stream handed to replicate ``r`` depends only on ``(seed, r)`` and not on how
work is scheduled across processes.
"""

from __future__ import annotations

import numpy as np


def make_rng(seed=None) -> np.random.Generator:
    """Philox generator from an int, a SeedSequence or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def substreams(seed, n: int) -> list[np.random.Generator]:
    """``n`` independent generators derived deterministically from ``seed``."""
    if isinstance(seed, np.random.Generator):
        # spawn from the generator's own seed sequence
        children = seed.bit_generator.seed_seq.spawn(n)
    else:
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = root.spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]


def child_seeds(seed, n: int) -> list[np.random.SeedSequence]:
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(n)
