"""Blocked iteration over index pairs ``i < j`` of a point array."""

from __future__ import annotations

from collections.abc import Iterator

import numpy as np

BLOCK = 512


def pair_blocks(n: int, block: int = BLOCK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(i, j)`` index arrays covering every pair ``i < j`` exactly once."""
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        i, j = np.meshgrid(rows, np.arange(n), indexing="ij")
        keep = j > i
        if np.any(keep):
            yield i[keep], j[keep]
