"""Seeded, splittable random streams.

Bits come from Philox4x64-10, a 64-bit counter-based generator (numpy's
``Philox`` bit generator), keyed through a ``SeedSequence``. Child streams
are derived by extending the spawn key with a CRC32 of a component name, so
``Rng(7).split("init")`` is the same stream on every platform and never
overlaps ``Rng(7).split("noise")``. Gaussian variates use the Box-Muller
transform on the uniform stream.
"""
import zlib

import numpy as np


class Rng:
    def __init__(self, seed=0, path=()):
        self.seed = int(seed)
        self.path = tuple(path)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.path)
        self._gen = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"

    def split(self, name):
        """Independent child stream identified by ``name``."""
        key = name if isinstance(name, int) else zlib.crc32(str(name).encode("utf-8"))
        return Rng(self.seed, self.path + (int(key),))

    def uniform(self, low=0.0, high=1.0, size=None):
        u = self._gen.random(size)
        return low + (high - low) * u

    def normal(self, size=None, loc=0.0, scale=1.0):
        """Gaussian draws via Box-Muller (both outputs of each pair used)."""
        count = 1 if size is None else int(np.prod(size))
        pairs = (count + 1) // 2
        u1 = 1.0 - self._gen.random(pairs)  # (0, 1], keeps log finite
        u2 = self._gen.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        z = loc + scale * z[:count]
        return float(z[0]) if size is None else z.reshape(size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n):
        return self._gen.permutation(n)

    def random(self, size=None):
        return self._gen.random(size)
