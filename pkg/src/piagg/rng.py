"""Deterministic 64-bit PRNG used by every stochastic routine in the package.

The generator is xoshiro256** seeded through splitmix64, implemented directly
so that identical seeds give identical streams on any platform or Python
build. All helpers that need randomness take an explicit integer seed and
construct their own generator, so concurrent callers never share state.
"""

from __future__ import annotations

import math

import numpy as np

_MASK64 = (1 << 64) - 1

# Weyl-sequence increment of splitmix64; also used to mix replication
# indices into a base seed.
MIX_CONSTANT = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (new_state, output)."""
    state = (state + MIX_CONSTANT) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def derive_seed(base_seed: int, index: int) -> int:
    """Derive an independent per-task seed from a base seed and an index.

    The index is folded in with a fixed 64-bit constant before one
    splitmix64 step, so consecutive indices give unrelated streams.
    """
    mixed = (int(base_seed) ^ ((int(index) + 1) * MIX_CONSTANT)) & _MASK64
    _, out = splitmix64(mixed)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Rng:
    """xoshiro256** generator with splitmix64 seeding.

    The four state words come from four consecutive splitmix64 outputs of
    the seed, which is the reference seeding procedure for this family.
    """

    __slots__ = ("_s0", "_s1", "_s2", "_s3", "_gauss_cache")

    def __init__(self, seed: int):
        state = int(seed) & _MASK64
        words = []
        for _ in range(4):
            state, w = splitmix64(state)
            words.append(w)
        if all(w == 0 for w in words):
            words[0] = MIX_CONSTANT  # the all-zero state is invalid
        self._s0, self._s1, self._s2, self._s3 = words
        self._gauss_cache: float | None = None

    def next_uint64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_uint64() >> 11) * (2.0 ** -53)

    def uniform(self, low: float, high: float, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.float64)
        for i in range(size):
            out[i] = low + (high - low) * self.random()
        return out

    def integer(self, high: int) -> int:
        """Uniform integer in [0, high); floor of a scaled 53-bit uniform."""
        return int(self.random() * high)

    def normal(self, size: int) -> np.ndarray:
        """Standard normal draws via Box-Muller (pairs cached)."""
        out = np.empty(size, dtype=np.float64)
        for i in range(size):
            if self._gauss_cache is not None:
                out[i] = self._gauss_cache
                self._gauss_cache = None
                continue
            u1 = self.random()
            if u1 <= 0.0:
                u1 = 2.0 ** -53
            u2 = self.random()
            r = math.sqrt(-2.0 * math.log(u1))
            theta = 2.0 * math.pi * u2
            out[i] = r * math.cos(theta)
            self._gauss_cache = r * math.sin(theta)
        return out

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        idx = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
        return idx

    def choice_with_replacement(self, cum_probs: np.ndarray, size: int) -> np.ndarray:
        """Draw indices by inverting a cumulative probability vector."""
        out = np.empty(size, dtype=np.int64)
        n = len(cum_probs)
        for i in range(size):
            k = int(np.searchsorted(cum_probs, self.random(), side="right"))
            out[i] = min(k, n - 1)
        return out
