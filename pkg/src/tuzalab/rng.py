"""Seeding conventions shared by every sampler in the package.

Two rules keep experiments replayable:

* Graph edges: the pair with lexicographic rank ``k`` among all ``C(n, 2)``
  pairs reads the ``k``-th double of ``Generator(Philox(key=seed))``.
  Philox is counter based, so that double can be produced on its own via
  ``Philox.advance(k // 4)`` followed by ``k % 4`` discarded draws
  (see :func:`edge_uniform`). Chunks of the edge stream can therefore be
  generated independently and in parallel.
* Trials: trial ``t`` of grid cell ``c`` under master seed ``s`` uses
  ``derive_seed(s, c, t)``, the first 64-bit word of
  ``SeedSequence(s, spawn_key=(c, t))``.
"""

from __future__ import annotations

import math

import numpy as np


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)))


def derive_seed(master: int, *keys: int) -> int:
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


def edge_uniform(seed: int, k: int) -> float:
    """The uniform that decides the pair of lexicographic rank ``k``."""
    bg = np.random.Philox(key=int(seed))
    bg.advance(k // 4)
    return float(np.random.Generator(bg).random(k % 4 + 1)[-1])


class UniformStream:
    """Buffered scalar uniforms with Poisson sampling by inversion.

    Scalar draws from a numpy Generator cost a Python call each; buffering
    keeps the branching samplers fast without changing the stream.
    """

    def __init__(self, seed: int, block: int = 4096):
        self._gen = make_generator(seed)
        self._block = block
        self._buf = self._gen.random(block)
        self._pos = 0

    def random(self) -> float:
        if self._pos == self._block:
            self._buf = self._gen.random(self._block)
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def poisson(self, lam: float) -> int:
        if lam <= 0.0:
            return 0
        if lam > 10.0:
            # inversion loses accuracy and speed this far out
            return int(self._gen.poisson(lam))
        u = self.random()
        k = 0
        p = math.exp(-lam)
        cdf = p
        while u > cdf:
            k += 1
            p *= lam / k
            cdf += p
            if p < 1e-300:
                break
        return k
