"""Deterministic seed derivation.

``derive_seed(master, label, index)`` is defined bit-exactly as::

    h    = FNV-1a-64(label encoded as UTF-8)
    z    = master XOR h XOR ((index + 1) * 0x9E3779B97F4A7C15 mod 2**64)
    z    = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z    = (z XOR (z >> 27)) * 0x94D049BB133111EB mod 2**64
    seed = z XOR (z >> 31)

(the last three lines are the SplitMix64 finaliser).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

__all__ = ["derive_seed", "fnv1a64", "splitmix64_mix", "rng_for"]


def fnv1a64(text: str) -> int:
    h = FNV_OFFSET
    for b in text.encode("utf-8"):
        h ^= b
        h = (h * FNV_PRIME) & MASK64
    return h


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, stream_label: str, index: int) -> int:
    if not (0 <= master <= MASK64 and 0 <= index <= MASK64):
        raise ValueError("master and index must be unsigned 64-bit integers")
    z = master ^ fnv1a64(stream_label) ^ (((index + 1) * GOLDEN_GAMMA) & MASK64)
    return splitmix64_mix(z)


def rng_for(master: int, stream_label: str, index: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, stream_label, index))
