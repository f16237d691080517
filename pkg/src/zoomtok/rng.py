"""Deterministic pseudo-random streams for reproducible weights and fixtures.

The generator is SplitMix64, a 64-bit counter-based scrambler.  Draw number
``k`` (1-based) for seed ``s`` is ``mix(s + k * GAMMA) mod 2**64`` with

    GAMMA = 0x9E3779B97F4A7C15
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27; z *= 0x94D049BB133111EB
            z ^= z >> 31

Floats in [0, 1) take the top 53 bits: ``(z >> 11) * 2**-53``.  Every step is
integer arithmetic mod 2**64, so streams are bit-identical on any platform.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF


def _mix(z: int) -> int:
    z ^= z >> 30
    z = (z * _MIX1) & _MASK
    z ^= z >> 27
    z = (z * _MIX2) & _MASK
    z ^= z >> 31
    return z


class SplitMix64:
    """Scalar stream of SplitMix64 draws starting from a 64-bit seed."""

    def __init__(self, seed: int):
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + GAMMA) & _MASK
        return _mix(self._state)

    def next_float(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * 2.0**-53

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.next_float()

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]; bias is negligible for small ranges."""
        span = high - low + 1
        return low + int(self.next_float() * span)


def u64_stream(seed: int, count: int) -> np.ndarray:
    """Vectorized draws 1..count for ``seed``, equal to repeated next_u64()."""
    counters = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(seed & _MASK) + counters * np.uint64(GAMMA)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return z


def uniform_stream(seed: int, count: int, low: float, high: float) -> np.ndarray:
    """Vectorized uniform draws in [low, high) as float64."""
    unit = (u64_stream(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53
    return low + (high - low) * unit
