"""Counter-based random streams.

Each trajectory gets a Philox key derived from ``(master_seed, sample)``;
each block of draws (one timestep of one phase) is addressed by setting the
Philox counter, so no stream depends on how many numbers another consumed.
"""
from __future__ import annotations

import os

import numpy as np

TAG_INIT = 0
TAG_PRESCRAMBLE = 1
TAG_DISSIPATIVE = 2
TAG_ANNEALED = 3


def env_seed(seed: int) -> int:
    """Return ``DCL_SEED`` from the environment when set, else ``seed``."""
    val = os.environ.get("DCL_SEED")
    return int(val) if val not in (None, "") else int(seed)


def sample_key(seed: int, sample: int) -> np.ndarray:
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(int(sample),))
    return ss.generate_state(2, np.uint64)


def block_stream(key: np.ndarray, tag: int, t: int) -> np.random.Generator:
    counter = np.array([0, t, tag, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
