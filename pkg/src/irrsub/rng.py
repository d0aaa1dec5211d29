"""Seeded, trial-indexed random streams.

Every randomized experiment derives one independent Philox stream per trial
from (master_seed, trial_index), so results never depend on worker count or
scheduling order.
"""

from __future__ import annotations

import secrets

import numpy as np

_U64 = np.uint64


def make_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-keyed stream: identical (seed, trial) pairs give identical draws."""
    key = np.array([master_seed & 0xFFFFFFFFFFFFFFFF, trial_index], dtype=_U64)
    return np.random.Generator(np.random.Philox(key=key))


def fresh_seed() -> int:
    """Draw a 64-bit master seed from system entropy (recorded by the caller)."""
    return secrets.randbits(63)
