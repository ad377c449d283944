"""Seeded deterministic random stream.

The generator is splitmix64, chosen because it is tiny enough to specify
completely, so any other implementation (in any language) can reproduce the
stream bit for bit:

    state <- (state + 0x9E3779B97F4A7C15) mod 2^64
    z <- state
    z <- ((z XOR (z >> 30)) * 0xBF58476D1CE4E5B9) mod 2^64
    z <- ((z XOR (z >> 27)) * 0x94D049BB133111EB) mod 2^64
    output z XOR (z >> 31)

Derived values, in terms of consecutive raw outputs z:

    random():   ((z >> 11) + 0) * 2^-53            uniform in [0, 1)
    uniform(lo, hi): lo + (hi - lo) * random()
    normal():   Box-Muller on u1 = ((z1 >> 11) + 1) * 2^-53 in (0, 1]
                and u2 = (z2 >> 11) * 2^-53; returns
                sqrt(-2 ln u1) * cos(2 pi u2) first, the matching
                sin() partner on the next call.
    below(n):   z mod n  (modulo bias is negligible at desk scale)
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)


class SeededRng:
    """splitmix64 stream; identical seed gives an identical stream everywhere."""

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        self._state = self.seed
        self._spare_normal: float | None = None

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def random(self) -> float:
        return (self.next_u64() >> 11) / _TWO53

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self.next_u64() % n

    def normal(self) -> float:
        if self._spare_normal is not None:
            out = self._spare_normal
            self._spare_normal = None
            return out
        u1 = ((self.next_u64() >> 11) + 1) / _TWO53
        u2 = (self.next_u64() >> 11) / _TWO53
        radius = math.sqrt(-2.0 * math.log(u1))
        angle = 2.0 * math.pi * u2
        self._spare_normal = radius * math.sin(angle)
        return radius * math.cos(angle)

    def uniform_array(self, shape: int | tuple[int, ...], lo: float, hi: float) -> np.ndarray:
        count = int(np.prod(shape))
        flat = [self.uniform(lo, hi) for _ in range(count)]
        return np.array(flat, dtype=np.float64).reshape(shape)

    def normal_array(self, shape: int | tuple[int, ...]) -> np.ndarray:
        count = int(np.prod(shape))
        flat = [self.normal() for _ in range(count)]
        return np.array(flat, dtype=np.float64).reshape(shape)
