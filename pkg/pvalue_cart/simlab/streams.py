"""
Seeded random streams for the simulation lab.

Stream rule: replication key (k_1, ..., k_m) under base seed s maps to
`Philox(SeedSequence(s, spawn_key=(k_1, ..., k_m)))`, a counter-based
generator, so every replication owns an independent stream whatever the
order in which replications are run.

Normal variates are drawn by inversion: z = ndtri((k + 0.5) / 2**53) with
k uniform on the 53-bit integers.
"""
import numpy as np
from scipy.special import ndtri

_MANTISSA = 2**53


def substream(seed: int, *key: int) -> np.random.Generator:
    if seed < 0 or any(k < 0 for k in key):
        raise ValueError(f"seed and key must be nonnegative. Got {seed}, {key}")
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniform variates on the open interval (0, 1)."""
    k = rng.integers(0, _MANTISSA, size=size, dtype=np.int64)
    return (k + 0.5) / _MANTISSA


def normal(rng: np.random.Generator, size) -> np.ndarray:
    return ndtri(uniform(rng, size))


def permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    # ranks of stream uniforms
    return np.argsort(uniform(rng, n), kind="stable")
