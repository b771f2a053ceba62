"""Portable, stream-keyed random numbers for reproducible data generation.

Bit-reproducibility across platforms and thread schedules is a hard contract
of the generator, so nothing here depends on a global RNG state or on
platform-variant algorithms:

* Bits come from the Philox 4x64-10 counter-based generator, keyed per
  logical stream. The 128-bit key is derived from (seed, stream ids) with
  the splitmix64 finalizer, so any tuple of small integers names a stream.
* Uniforms map the top 53 bits of each word into (0, 1] via
  ``((raw >> 11) + 1) * 2**-53``.
* Normal variates use Box-Muller on consecutive uniform pairs, cosine branch
  first, interleaved ``[z_cos0, z_sin0, z_cos1, ...]`` (Ziggurat and other
  table-driven methods vary across library builds and are deliberately
  avoided).
* Bounded integers use rejection sampling on raw 64-bit words, which makes
  ``permutation`` a plain Fisher-Yates shuffle.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_KEY_SALT_0 = 0x243F6A8885A308D3
_KEY_SALT_1 = 0x452821E638D01377
_RAW_BUFFER = 1024


def mix64(z: int) -> int:
    """splitmix64 finalizer; a fixed 64-bit bijective hash."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive64(seed: int, *ids: int) -> int:
    """Fold a seed and any number of stream ids into one 64-bit value."""
    h = mix64(seed & _MASK64)
    for i in ids:
        h = mix64(h ^ mix64(i & _MASK64))
    return h


class Stream:
    """One independent random stream identified by (seed, *ids)."""

    def __init__(self, seed: int, *ids: int):
        base = derive64(seed, *ids)
        key = np.array(
            [mix64(base ^ _KEY_SALT_0), mix64(base ^ _KEY_SALT_1)],
            dtype=np.uint64,
        )
        self._bitgen = np.random.Philox(key=key)
        self._buffer: list[int] = []

    def raw(self, count: int) -> np.ndarray:
        """`count` raw 64-bit words."""
        out = self._bitgen.random_raw(count)
        return np.atleast_1d(np.asarray(out, dtype=np.uint64))

    def uniforms(self, count: int) -> np.ndarray:
        """`count` doubles in (0, 1]."""
        bits = (self.raw(count) >> np.uint64(11)).astype(np.float64)
        return (bits + 1.0) * (2.0 ** -53)

    def normals(self, count: int) -> np.ndarray:
        """`count` standard normals via Box-Muller (cos branch first)."""
        pairs = (count + 1) // 2
        u = self.uniforms(2 * pairs)
        r = np.sqrt(-2.0 * np.log(u[0::2]))
        theta = (2.0 * np.pi) * u[1::2]
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:count]

    def _next_raw(self) -> int:
        if not self._buffer:
            self._buffer = [int(v) for v in self.raw(_RAW_BUFFER)][::-1]
        return self._buffer.pop()

    def integer_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        threshold = ((1 << 64) // bound) * bound
        while True:
            r = self._next_raw()
            if r < threshold:
                return r % bound

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        perm = np.arange(n, dtype=np.int64)
        for i in range(n - 1, 0, -1):
            j = self.integer_below(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def replicate_seed(base_seed: int, n: int, replicate: int) -> int:
    """Stable per-replicate seed so grids can be extended without reshuffling."""
    return derive64(base_seed, n, replicate)
