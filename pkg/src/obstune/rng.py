"""Explicit-state 64-bit random source.

The generator is small enough to be re-implemented bit-exactly anywhere; the
update equations are written out in ``docs/formats.md``. Seeding and substream
derivation go through SplitMix64, draws through xorshift64*.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1

_GOLDEN = 0x9E3779B97F4A7C15
_XORSHIFT_MULT = 0x2545F4914F6CDD1D

# Labels used when deriving substreams from a session seed.
STREAM_BOOTSTRAP = 1
STREAM_LOOP = 2
STREAM_PASS = 3
STREAM_NOISE = 4
STREAM_BASELINE = 5


def splitmix64(x: int) -> int:
    """One SplitMix64 output for input state ``x`` (state advance included)."""
    z = (x + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix(seed: int, *keys: int) -> int:
    """Derive a child seed from ``seed`` and an ordered key path.

    ``mix(s, a, b) == mix(mix(s, a), b)``; every step is
    ``splitmix64(parent ^ splitmix64(key))``.
    """
    out = seed & MASK64
    for key in keys:
        out = splitmix64(out ^ splitmix64(key & MASK64))
    return out


class SeededRandomState:
    """xorshift64* stream seeded through SplitMix64.

    Single-owner and mutable; share seeds, not instances.
    """

    __slots__ = ("seed", "_state")

    def __init__(self, seed: int) -> None:
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise TypeError(f"seed must be an int, got {type(seed).__name__}")
        self.seed = seed & MASK64
        state = splitmix64(self.seed)
        # xorshift has an all-zero fixed point
        self._state = state if state else _GOLDEN

    @classmethod
    def derived(cls, seed: int, *keys: int) -> "SeededRandomState":
        return cls(mix(seed, *keys))

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self._state = x
        return (x * _XORSHIFT_MULT) & MASK64

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high], rejection-sampled."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            r = self.next_u64()
            if r < limit:
                return low + r % span

    def gauss(self, mu: float = 0.0, sigma: float = 1.0) -> float:
        """Box-Muller normal deviate; consumes exactly two draws."""
        u1 = 1.0 - self.random()  # (0, 1]
        u2 = self.random()
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def getstate(self) -> int:
        return self._state

    def __repr__(self) -> str:
        return f"SeededRandomState(seed={self.seed}, state=0x{self._state:016x})"
