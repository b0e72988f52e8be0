"""Seeded, portable random primitives built on the SplitMix64 finalizer.

Every draw is a pure function of (key, counter), so streams reproduce
bit-for-bit across platforms and library versions; nothing here depends on
numpy's Generator stream stability. Constants are the published SplitMix64
ones (Steele, Lea, Flood 2014).
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1


def _finalize(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _mix_int(x: int) -> int:
    z = x & _U64_MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _U64_MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _U64_MASK
    z ^= z >> 31
    return z


def derive_key(seed: int, *words: int) -> int:
    """Fold extra stream words (frame numbers, stage tags) into a seed."""
    key = _mix_int(seed)
    for w in words:
        key = _mix_int(((key ^ _mix_int(w)) * 0x9E3779B97F4A7C15) & _U64_MASK)
    return key


class PortableRng:
    """Counter-based SplitMix64 stream: output_i = finalize(key + (i+1)*golden)."""

    def __init__(self, seed: int, *words: int):
        self._key = np.uint64(derive_key(seed, *words))
        self._counter = 0

    def u64(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _finalize(idx * _GOLDEN + self._key)

    def uniform(self, n: int) -> np.ndarray:
        """n float64 draws in [0, 1), 53-bit resolution."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """n float64 standard-normal draws via Box-Muller."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)  # (0, 1]: keeps log finite
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        a = 2.0 * np.pi * u2
        out = np.empty(2 * m, dtype=np.float64)
        out[0::2] = r * np.cos(a)
        out[1::2] = r * np.sin(a)
        return out[:n]

    def unit_vectors(self, n: int, dim: int) -> np.ndarray:
        """(n, dim) float32 rows of unit Euclidean norm."""
        v = self.normal(n * dim).reshape(n, dim)
        norms = np.linalg.norm(v, axis=1, keepdims=True)
        norms[norms < 1e-30] = 1.0
        return (v / norms).astype(np.float32)

    def sample(self, population: int, k: int) -> np.ndarray:
        """k distinct indices from range(population), sorted ascending."""
        if not 0 <= k <= population:
            raise ValueError(f"cannot sample {k} of {population}")
        keys = self.u64(population)
        picked = np.argsort(keys, kind="stable")[:k]
        return np.sort(picked)
