"""Seed derivation.

Everything random in a campaign is a function of a 64-bit master seed.  Seeds
are derived with SplitMix64 over a counter, which is a bijection on 64-bit
words, so distinct counters can never collide.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = (x + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _word(part) -> int:
    if isinstance(part, int):
        return part & MASK64
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def mix(*parts) -> int:
    """Fold ints and strings into one 64-bit word, order-sensitively."""
    h = 0
    for part in parts:
        h = splitmix64(h ^ _word(part))
    return h


def unit_float(*parts) -> float:
    """Deterministic float in [0, 1) from the hashed parts (53-bit resolution)."""
    return (mix(*parts) >> 11) / float(1 << 53)


def generator(seed: int) -> np.random.Generator:
    """Counter-based numpy generator (Philox) keyed by a 64-bit seed."""
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


@dataclass(frozen=True)
class SeedSource:
    """Seeds for the instance slots of one (subject, repetition) cell."""

    master_seed: int
    subject: str
    repetition: int = 0

    def seed(self, slot: int) -> int:
        base = mix(self.master_seed, self.subject, self.repetition)
        # odd increment => injective in slot
        return splitmix64((base + slot * GOLDEN_GAMMA) & MASK64)

    def __call__(self, slot: int) -> int:
        return self.seed(slot)
