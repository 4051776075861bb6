"""Portable seeded pseudo-random generator.

Streams are defined entirely in this module so that frames, masks and
instances are reproducible bit-for-bit on any platform and any numpy
version.

The state is seeded with SplitMix64 and advanced with xorshift64*
(Marsaglia's xorshift with shifts 12, 25, 27 followed by multiplication
by 0x2545F4914F6CDD1D). Uniform doubles use the top 53 bits; normal
variates use the Box-Muller transform, cosine branch then sine branch.
"""

import math

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


def splitmix64(state):
    """Return ``(next_state, output)`` of one SplitMix64 step."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class XorShift64Star:
    """xorshift64* generator seeded through SplitMix64.

    Parameters
    ----------
    seed : int
        Any integer; reduced modulo 2**64.
    """

    def __init__(self, seed=0):
        _, s = splitmix64(int(seed) & _MASK64)
        self._state = s or 0x9E3779B97F4A7C15
        self._spare = None

    def next_u64(self):
        x = self._state
        x ^= x >> 12
        x ^= (x << 25) & _MASK64
        x ^= x >> 27
        self._state = x
        return (x * 0x2545F4914F6CDD1D) & _MASK64

    def uniform(self):
        """Uniform double in [0, 1)."""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def normal(self):
        if self._spare is not None:
            v, self._spare = self._spare, None
            return v
        u1 = 1.0 - self.uniform()  # (0, 1]
        u2 = self.uniform()
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._spare = r * math.sin(theta)
        return r * math.cos(theta)

    def normals(self, shape):
        size = int(np.prod(shape))
        return np.array([self.normal() for _ in range(size)], dtype=float).reshape(shape)

    def integer(self, n):
        """Uniform integer in ``range(n)`` (rejection sampling, unbiased)."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        items = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.integer(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def sample(self, population, k):
        """``k`` distinct items of ``population``, in draw order."""
        population = list(population)
        if k > len(population):
            raise ValueError("sample larger than population")
        perm = self.permutation(len(population))
        return [population[i] for i in perm[:k]]
