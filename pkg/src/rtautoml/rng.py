"""Deterministic child-stream derivation from a single root seed.

Every source of randomness in a run pulls from a child generator keyed by a
fixed component index (and usually the timestep), so identical configs replay
bit-identically and components never share a stream.
"""
from __future__ import annotations

import numpy as np

# Fixed component indices used as spawn keys. Append new ones; never renumber.
GA = 0
STEP = 1
EXTRACT = 2
LEARNER = 3
INIT = 4
FOLD = 5
DATA = 6
REPEAT = 7
FITNESS = 8
PHASE2 = 9

_MASK64 = (1 << 64) - 1


def mask_seed(seed: int) -> int:
    """Map any int onto the unsigned 64-bit domain SeedSequence accepts."""
    return int(seed) & _MASK64


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Generator for component ``key`` of run ``seed`` (fixed-index splitting)."""
    return np.random.default_rng(np.random.SeedSequence(mask_seed(seed), spawn_key=tuple(key)))


def child_seed(seed: int, *key: int) -> int:
    """A scalar 64-bit child seed, for places that record or re-derive seeds."""
    ss = np.random.SeedSequence(mask_seed(seed), spawn_key=tuple(key))
    return int(ss.generate_state(1, np.uint64)[0])
