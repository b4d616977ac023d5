"""Deterministic random streams for every stage of the pipeline.

The generator is counter-based splitmix64: output ``n`` (1-based) of a stream
with seed ``s`` is ``mix64((s + n * GAMMA) mod 2^64)``.  Because each output
depends only on (seed, counter), bulk generation vectorizes with numpy and a
stream can be reproduced from any language with 64-bit integers.  The full
recipe (constants, derivation of substreams, uniform/Gaussian mapping) is
written out in docs/formats.md; tests pin reference vectors.

Scalar draws delegate to the vectorized kernels so there is exactly one
arithmetic path.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

# Substream tags used across the pipeline (documented; keep values stable).
TAG_RECORD = 1
TAG_KMEANS_SEED = 2
TAG_SELECT_K = 3
TAG_SPLIT = 4
TAG_FOREST_TREE = 5
TAG_PROFILE_SAMPLE = 6
TAG_BASELINE_SEED = 7


def mix64(z: int) -> int:
    """splitmix64 finalizer on a 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a substream seed from a master seed and integer keys.

    s0 = mix64(seed + GAMMA); then for each key k:
    s = mix64((s ^ mix64(k + GAMMA)) + GAMMA).
    """
    s = mix64((seed + GAMMA) & MASK64)
    for k in keys:
        s = mix64(((s ^ mix64((k + GAMMA) & MASK64)) + GAMMA) & MASK64)
    return s


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX_A)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX_B)
    return z ^ (z >> np.uint64(31))


class Stream:
    """A seekable splitmix64 stream: output n is mix64(seed + n * GAMMA)."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def spawn(self, *keys: int) -> "Stream":
        """Child stream keyed on this stream's seed plus integer keys."""
        return Stream(derive_seed(self.seed, *keys))

    def next_u64s(self, count: int) -> np.ndarray:
        """The next `count` raw 64-bit outputs as a uint64 array."""
        idx = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            return _mix_array(np.uint64(self.seed) + idx * np.uint64(GAMMA))

    def uniforms(self, count: int) -> np.ndarray:
        """Uniform float64 in [0, 1) with 53-bit resolution."""
        return (self.next_u64s(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def gaussians(self, count: int) -> np.ndarray:
        """Standard normals via Box-Muller; each value consumes two outputs.

        u1 is shifted into (0, 1] so log(u1) is always finite; the sine
        partner is discarded to keep the stream layout position-stable.
        """
        raw = self.next_u64s(2 * count)
        u1 = ((raw[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53
        u2 = (raw[1::2] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)

    def gaussian(self) -> float:
        return float(self.gaussians(1)[0])

    def randint_below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint_below requires n >= 1")
        return min(int(self.uniform() * n), n - 1)

    def weighted_index(self, cumulative: np.ndarray) -> int:
        """Index drawn with probability proportional to the cumulative weights."""
        total = float(cumulative[-1])
        if total <= 0.0:
            raise ValueError("weights must have positive total")
        r = self.uniform() * total
        return min(int(np.searchsorted(cumulative, r, side="right")), len(cumulative) - 1)

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates permutation of range(n)."""
        order = np.arange(n)
        for i in range(n - 1, 0, -1):
            j = self.randint_below(i + 1)
            order[i], order[j] = order[j], order[i]
        return order

    def sample_without_replacement(self, n: int, k: int) -> list[int]:
        """k distinct indices from range(n), uniform, in draw order."""
        if k > n:
            raise ValueError("sample larger than population")
        pool = list(range(n))
        for i in range(k):
            j = i + self.randint_below(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]
