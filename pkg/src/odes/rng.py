"""Seeded deterministic randomness for exam assembly.

A self-contained splitmix64 stream: the same 64-bit seed yields the
same sequence on every platform, Python version, and process, which is
what makes stored assignments reproducible. The stdlib generator is not
held to that guarantee for shuffling.
"""

from __future__ import annotations

import secrets

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SeededRng:
    """splitmix64 generator over a 64-bit state."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound); rejection sampling, no modulo bias."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            value = self.next_u64()
            if value < limit:
                return value % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def permutation(self, n: int) -> tuple[int, ...]:
        slots = list(range(n))
        self.shuffle(slots)
        return tuple(slots)


def fresh_seed() -> int:
    """Cryptographically random 64-bit seed for production sessions."""
    return secrets.randbits(64)
