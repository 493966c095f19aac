"""Portable seeded random stream.

Everything random in brandgraph (Louvain visit order, synthetic datasets,
initial layout positions) draws from :class:`Stream`, which consumes the raw
64-bit output of numpy's PCG64 bit generator.  The raw PCG64 sequence for a
given seed is fixed by the algorithm, so fixtures reproduce on any platform
and numpy version; the higher-level ``Generator`` distribution methods carry
no such guarantee and are deliberately not used.
"""

from __future__ import annotations

from typing import MutableSequence

import numpy as np

_INV_2_53 = 1.0 / (1 << 53)


class Stream:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def random(self, size: int | None = None):
        """Uniform doubles in [0, 1) built from the top 53 bits of each draw."""
        if size is None:
            return float(int(self._bits.random_raw()) >> 11) * _INV_2_53
        raw = self._bits.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def below(self, n: int) -> int:
        """Integer uniform on ``range(n)``."""
        if n <= 0:
            raise ValueError("n must be positive")
        return min(int(self.random() * n), n - 1)

    def shuffle(self, items: MutableSequence) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]

    def choice_weighted(self, cumulative: np.ndarray, size: int) -> np.ndarray:
        """Draw indices by inverse-CDF lookup on an increasing cumulative array."""
        u = self.random(size) * cumulative[-1]
        idx = np.searchsorted(cumulative, u, side="right")
        return np.minimum(idx, len(cumulative) - 1)
