"""Keyed random substreams.

Every draw is a function of ``(seed, concern, slot)`` only, so switching one
stochastic concern on or off never shifts the numbers another concern sees.
"""

from __future__ import annotations

import math

import numpy as np

# concern identifiers; values are part of the key and must not change
TOPOLOGY = 1
FADING = 2
ARRIVALS = 3
MAC = 4
TAGGED = 5
SENSING = 6

_BLOCK_TAG = 0xB10C
_MAX_BLOCK_VALUES = 1 << 20


class Streams:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._blocks: dict = {}

    def generator(self, concern: int, slot: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, concern, slot])

    def _block(self, concern, slot, shape, kind):
        size = math.prod(shape) or 1
        length = max(1, min(1024, _MAX_BLOCK_VALUES // size))
        index = slot // length
        key = (concern, kind, shape, length)
        cached = self._blocks.get(key)
        if cached is None or cached[0] != index:
            rng = np.random.default_rng([self.seed, concern, _BLOCK_TAG, index, length, *shape])
            data = rng.random((length, *shape)) if kind == "u" else rng.standard_exponential((length, *shape))
            cached = (index, data)
            self._blocks[key] = cached
        return cached[1][slot % length]

    def uniform(self, concern: int, slot: int, n: int) -> np.ndarray:
        """n uniforms on [0, 1) for this slot; fixed-n requests are served from cached blocks."""
        return self._block(concern, slot, (n,), "u")

    def exponential(self, concern: int, slot: int, shape: tuple) -> np.ndarray:
        """Unit-mean exponentials of the given shape for this slot."""
        return self._block(concern, slot, tuple(shape), "e")
