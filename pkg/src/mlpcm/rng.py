"""Counter-based SplitMix64 streams.

Every random quantity in the package comes from here so outputs are
portable across numpy versions and platforms. Output ``i`` (0-based) of
the stream seeded with ``s`` is ``mix64(s + (i + 1) * GOLDEN_GAMMA)``
with wrapping 64-bit arithmetic, which is exactly what a sequential
SplitMix64 generator produces.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

_U = np.uint64


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic sub-seed for a child stream, e.g. one per bank or trace."""
    s = seed & MASK64
    for k in keys:
        s = mix64((s ^ mix64((k + 1) * GOLDEN_GAMMA)) & MASK64)
    return s


def _mix64_array(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
        return z ^ (z >> _U(31))


class SplitMix64:
    """Sequential view over the counter-based stream.

    >>> SplitMix64(0).next_u64()
    16294208416658607535
    """

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def u64(self, n: int) -> np.ndarray:
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = _U(self.seed) + idx * _U(GOLDEN_GAMMA)
        self.counter += n
        return _mix64_array(z)

    def next_u64(self) -> int:
        return int(self.u64(1)[0])

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) built from the top 53 bits."""
        return (self.u64(n) >> _U(11)).astype(np.float64) * (1.0 / (1 << 53))

    def below(self, bound: int, n: int) -> np.ndarray:
        """Integers in [0, bound) via the multiply-shift reduction of the top 32 bits."""
        if not 0 < bound <= 1 << 32:
            raise ValueError(f"bound must be in (0, 2**32], got {bound}")
        hi = self.u64(n) >> _U(32)
        return (hi * _U(bound)) >> _U(32)

    def normal(self) -> float:
        """One standard normal deviate (Box-Muller, cosine branch)."""
        u1 = 1.0 - float(self.uniform(1)[0])  # (0, 1]
        u2 = float(self.uniform(1)[0])
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)
