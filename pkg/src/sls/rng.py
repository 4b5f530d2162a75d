"""Seeded counter-based pseudo-random generator used for sampling.

The generator is deliberately simple so traces can be reproduced by any
implementation in any language.  Draw ``i`` (zero-based) from seed ``s`` is::

    mix64((s + (i + 1) * 0x9E3779B97F4A7C15) mod 2**64)

where ``mix64`` is the 64-bit finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with all arithmetic modulo 2**64.  A unit draw in [0, 1) keeps the top 53
bits: ``(u64 >> 11) * 2.0**-53``.  Both are exact under IEEE-754, so two
runs (or two implementations) with the same seed produce identical draws.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_UNIT = 2.0**-53


def mix64(x: int) -> int:
    """SplitMix64 finalizer on a 64-bit integer."""
    z = x & _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


class CounterRng:
    """Counter-based generator: stateless mixing of seed + draw index."""

    def __init__(self, seed: int):
        if not 0 <= seed < (1 << 64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.counter = 0

    def next_u64(self) -> int:
        value = mix64((self.seed + (self.counter + 1) * _GOLDEN) & _MASK)
        self.counter += 1
        return value

    def next_unit(self) -> float:
        """Uniform float64 in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * _UNIT

    def unit_block(self, n: int) -> np.ndarray:
        """Vectorized batch of ``n`` unit draws, identical to n next_unit() calls."""
        idx = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        z = (np.uint64(self.seed) + idx * np.uint64(_GOLDEN))
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        self.counter += n
        return (z >> np.uint64(11)).astype(np.float64) * _UNIT
