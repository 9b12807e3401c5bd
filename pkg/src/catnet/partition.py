"""Optimal protocols when entanglement is capped below the minimum.

The sensors are split into groups that are contiguous in the order of
decreasing ``|alpha_i|``; each group runs its own optimal protocol for its
share of the linear function and the variances add.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from catnet.core import FunctionCoefficients, normalize

FEAS_TOL = 1e-9


def sorted_order(fc: FunctionCoefficients) -> list[int]:
    """Nonzero indices by decreasing |alpha|, ties by index."""
    return sorted(fc.nonzero, key=lambda i: (-abs(fc.alpha[i]), i))


def _block_feasible(mags: np.ndarray, k: int) -> bool:
    return mags.sum() / mags.max() <= k + FEAS_TOL


@dataclass(frozen=True)
class Partition:
    k: int
    blocks: tuple[tuple[int, ...], ...]
    variance: float  # times t^2

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "blocks": [list(b) for b in self.blocks],
            "variance_times_t2": self.variance,
        }

    def is_valid(self, fc: FunctionCoefficients) -> bool:
        order = sorted_order(fc)
        flat = [i for b in self.blocks for i in b]
        if flat != order:
            return False
        return all(_block_feasible(np.abs(fc.alpha[list(b)]), self.k) for b in self.blocks)


def _as_fc(fc) -> FunctionCoefficients:
    return fc if isinstance(fc, FunctionCoefficients) else normalize(fc)


def partition_variance(p: Partition, fc: FunctionCoefficients, t: float = 1.0) -> float:
    """(1/t^2) * sum over blocks of the squared largest |alpha| in the block."""
    fc = _as_fc(fc)
    return sum(float(np.max(np.abs(fc.alpha[list(b)]))) ** 2 for b in p.blocks) / t**2


def optimal_partition(fc: FunctionCoefficients | Sequence[float], k: int) -> Partition:
    """Dynamic program over prefixes of the sorted order, O(d^2).

    best[j] is the minimum cost of splitting the first j sorted sensors;
    a block (i, j] costs the square of its first (largest) magnitude.
    Zero coefficients need no sensing and are left out of every block.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    fc = _as_fc(fc)
    order = sorted_order(fc)
    mags = np.abs(fc.alpha[order])
    n = len(order)
    best = np.full(n + 1, np.inf)
    best[0] = 0.0
    split = np.zeros(n + 1, dtype=int)
    for j in range(1, n + 1):
        for i in range(j):
            if not _block_feasible(mags[i:j], k):
                continue
            cost = best[i] + mags[i] ** 2
            # strict improvement keeps the earliest split on ties
            if cost < best[j]:
                best[j], split[j] = cost, i
    blocks, j = [], n
    while j > 0:
        i = split[j]
        blocks.append(tuple(order[i:j]))
        j = i
    blocks.reverse()
    return Partition(k, tuple(blocks), float(best[n]))


def brute_force_partition(fc: FunctionCoefficients | Sequence[float], k: int) -> Partition:
    """Minimum over all 2^(m-1) contiguous splits of the sorted order."""
    fc = _as_fc(fc)
    order = sorted_order(fc)
    mags = np.abs(fc.alpha[order])
    n = len(order)
    best = None
    for r in range(n):
        for cuts in combinations(range(1, n), r):
            bounds = (0, *cuts, n)
            segs = [(bounds[a], bounds[a + 1]) for a in range(len(bounds) - 1)]
            if not all(_block_feasible(mags[i:j], k) for i, j in segs):
                continue
            cost = sum(float(mags[i]) ** 2 for i, _ in segs)
            if best is None or cost < best[0]:
                best = (cost, tuple(tuple(order[i:j]) for i, j in segs))
    return Partition(k, best[1], best[0])
