"""Seed derivation and random generators used for reproducible runs."""

import numpy as np

MASK64 = (1 << 64) - 1
GENERATOR_ID = "numpy.random.Philox"


def splitmix64(value: int) -> int:
    """One splitmix64 output step for a 64-bit input."""
    z = (value + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replication_seed(base_seed: int, replication: int) -> int:
    """Independent stream seed for replication ``replication`` of a run."""
    return splitmix64((int(base_seed) ^ int(replication)) & MASK64)


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & MASK64))
