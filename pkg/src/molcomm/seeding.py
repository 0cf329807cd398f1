"""Platform-independent seed derivation."""

import numpy as np

MASK64 = (1 << 64) - 1


def stable_mix(base_seed: int, index: int) -> int:
    """SplitMix64 output for state ``base_seed`` after ``index + 1`` increments."""
    z = (int(base_seed) + (int(index) + 1) * 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))
