"""
SplitMix64 PRNG - nguồn random duy nhất, deterministic và state-threading
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..exceptions import DimensionError


MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB

_TWO_POW_MINUS_53 = 2.0 ** -53


@dataclass(frozen=True)
class Rng:
    """Immutable generator state; every draw returns a new Rng"""
    state: int = 0

    def __post_init__(self):
        object.__setattr__(self, "state", int(self.state) & MASK64)

    def draw_u64(self, count: int) -> Tuple["Rng", np.ndarray]:
        """
        Vectorised form of `count` successive rng_next calls

        Returns:
            (advanced Rng, uint64 array of outputs in draw order)
        """
        if count < 0:
            raise DimensionError(f"cannot draw {count} values")
        steps = np.arange(1, count + 1, dtype=np.uint64)
        # uint64 array arithmetic wraps modulo 2**64
        z = np.uint64(self.state) + steps * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)
        z = z ^ (z >> np.uint64(31))
        advanced = Rng((self.state + count * GOLDEN_GAMMA) & MASK64)
        return advanced, z


def rng_next(rng: Rng) -> Tuple[Rng, int]:
    """One SplitMix64 step"""
    state = (rng.state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    z = z ^ (z >> 31)
    return Rng(state), z


def u64_to_unit(values: np.ndarray) -> np.ndarray:
    """Top 53 bits -> float64 on [0, 1)"""
    return (values >> np.uint64(11)).astype(np.float64) * _TWO_POW_MINUS_53


def rng_uniform(rng: Rng, count: int) -> Tuple[Rng, np.ndarray]:
    """`count` floats on [0, 1)"""
    rng, raw = rng.draw_u64(count)
    return rng, u64_to_unit(raw)


def rng_permutation(rng: Rng, n: int) -> Tuple[Rng, np.ndarray]:
    """Deterministic permutation of range(n): stable argsort of fresh keys"""
    rng, keys = rng.draw_u64(n)
    return rng, np.argsort(keys, kind="stable")


def derive_seed(seed: int, class_id: int) -> int:
    """Per-class seed, độc lập với thứ tự train"""
    return (int(seed) ^ int(class_id)) & MASK64
