"""Seedable, splittable random number streams.

The generator is splitmix64: 64-bit state advanced by a fixed odd increment,
with an avalanching finalizer applied to each state to produce output words.
Because the k-th state is simply ``state0 + k * GAMMA (mod 2**64)``, whole
blocks of outputs can be produced with vectorized numpy arithmetic, and the
simulation kernel can reproduce the exact same sequence one word at a time.

Streams are derived, not advanced, from a root seed: ``derive(seed, a, b, ...)``
hashes the path elements into an independent starting state.  Two streams with
different paths behave as independent generators, which is what lets every
replication own private substreams regardless of execution order.
"""

from __future__ import annotations

import numpy as np

ALGORITHM = "splitmix64"

GAMMA = 0x9E3779B97F4A7C15
_MASK = 0xFFFFFFFFFFFFFFFF
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
# Odd multiplier used when folding stream-path elements into the state.
_PATH = 0xD1B54A32D192ED03

_INV_2_53 = 2.0 ** -53


def mix64(z: int) -> int:
    """Finalizer of splitmix64: avalanche a 64-bit word (Python int in, int out)."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def derive_state(seed: int, *path: int) -> int:
    """Hash a root seed and a stream path into a starting state.

    Each path element is folded in with an odd multiplier and re-avalanched,
    so (seed, 1, 0) and (seed, 0, 1) land in unrelated states.
    """
    s = mix64(seed & _MASK)
    for p in path:
        s = mix64((s + ((p + 1) * _PATH)) & _MASK)
    return s


class Stream:
    """One splitmix64 output stream.

    >>> s = Stream.derive(42, 0, 3)
    >>> s.exponential(2.0)  # doctest: +SKIP
    """

    __slots__ = ("state",)

    def __init__(self, state: int):
        self.state = state & _MASK

    @classmethod
    def derive(cls, seed: int, *path: int) -> "Stream":
        return cls(derive_state(seed, *path))

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & _MASK
        return mix64(self.state)

    def uniform(self) -> float:
        """One double in (0, 1] (53-bit resolution, never 0 so log() is safe)."""
        return ((self.next_u64() >> 11) + 1) * _INV_2_53

    def exponential(self, mean: float) -> float:
        return -mean * np.log(self.uniform())

    # -- vectorized block generation ------------------------------------

    def _next_block(self, n: int) -> np.ndarray:
        """Advance the stream by n words and return them as uint64[n]."""
        k = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + k * np.uint64(GAMMA)
        self.state = (self.state + n * GAMMA) & _MASK
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in (0, 1], identical to n calls of uniform()."""
        u = self._next_block(n)
        return ((u >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53

    def exponentials(self, n: int, mean: float) -> np.ndarray:
        return -mean * np.log(self.uniforms(n))
