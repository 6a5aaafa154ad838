"""SplitMix64: the named, seedable random generator used by the CLI.

Chosen for trivial cross-language portability: the whole generator is
the 64-bit finalizer below plus a Weyl increment, so counter columns
produced from its streams can be reproduced in any language from the
same seed.

Stream splitting (documented contract): the stream for a benchmark
cell is seeded by folding the cell coordinates into the base seed one
at a time,

    state = mix64(base_seed)
    for part in parts:            # e.g. engine index, length, trial
        state = mix64(state ^ (part * GOLDEN))

then drawing from SplitMix64 at that state. Doubles are formed from
the top 53 bits: (x >> 11) * 2**-53, uniform on [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """The SplitMix64 finalizer (avalanching 64-bit permutation)."""
    x &= _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def stream_seed(base_seed: int, *parts: int) -> int:
    """Derive the seed of the (parts...) stream from the base seed."""
    state = mix64(base_seed)
    for part in parts:
        state = mix64(state ^ ((int(part) * GOLDEN) & _MASK))
    return state


class SplitMix64:
    """Sequential SplitMix64 stream."""

    def __init__(self, seed: int):
        self._state = int(seed) & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + GOLDEN) & _MASK
        return mix64(self._state)

    def uniform(self) -> float:
        """One double, uniform on [0, 1)."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles, uniform on [0, 1); same stream as repeated uniform()."""
        if n == 0:
            return np.empty(0)
        steps = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(GOLDEN)
        states = np.uint64(self._state) + steps  # wraps mod 2**64
        self._state = int(states[-1])
        x = states
        x = (x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(31)
        return (x >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
