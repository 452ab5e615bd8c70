"""Dynamic weighted sampling over nonnegative float weights.

A binary indexed tree (Fenwick tree) supporting weight updates,
appends and weight-proportional index sampling, each in logarithmic
time. This is the proposal structure behind the accelerated endpoint
sampler: leaves hold degree-based attachment weights that change by
small increments every growth step.
"""

from __future__ import annotations

import numpy as np

__all__ = ["WeightedIndex"]


class WeightedIndex:
    """Fenwick tree keyed 0..len-1 with float weights.

    ``sample`` draws an index with probability proportional to its
    weight; ``add`` shifts one weight; ``append`` grows the index. The
    tree array is preallocated to ``capacity`` and doubles on demand.
    """

    def __init__(self, weights=None, capacity: int = 64):
        n = 0 if weights is None else len(weights)
        cap = max(int(capacity), n, 1)
        self._tree = np.zeros(cap + 1)
        self._size = 0
        if weights is not None:
            for w in weights:
                self.append(float(w))

    def __len__(self) -> int:
        return self._size

    def _grow(self, cap: int) -> None:
        tree = np.zeros(cap + 1)
        tree[: self._tree.size] = self._tree
        # Rebuild is simpler than in-place extension and stays O(cap).
        leaves = self.leaf_weights()
        tree[:] = 0.0
        self._tree = tree
        size = self._size
        self._size = 0
        for w in leaves:
            self.append(float(w))
        assert self._size == size

    def append(self, weight: float) -> None:
        if weight < 0.0:
            raise ValueError("weights must be nonnegative")
        if self._size + 1 >= self._tree.size:
            self._grow(2 * (self._tree.size - 1))
        self._size += 1
        i = self._size  # 1-based position of the new leaf
        # A fresh Fenwick slot covers [i - lowbit(i) + 1, i]; seed it with
        # the prefix weight of the covered range, then add the new leaf.
        lo = i - (i & (-i))
        self._tree[i] = self._prefix(i - 1) - self._prefix(lo)
        self._add_1based(i, weight)

    def add(self, index: int, delta: float) -> None:
        """Add ``delta`` to the weight at ``index`` (0-based)."""
        if not 0 <= index < self._size:
            raise IndexError("index out of range")
        self._add_1based(index + 1, delta)

    def _add_1based(self, i: int, delta: float) -> None:
        tree = self._tree
        size = self._size
        while i <= size:
            tree[i] += delta
            i += i & (-i)

    def _prefix(self, i: int) -> float:
        """Sum of weights at 0-based indices < i (i is a count, 0..size)."""
        s = 0.0
        tree = self._tree
        while i > 0:
            s += tree[i]
            i -= i & (-i)
        return s

    @property
    def total(self) -> float:
        return self._prefix(self._size)

    def weight(self, index: int) -> float:
        if not 0 <= index < self._size:
            raise IndexError("index out of range")
        return self._prefix(index + 1) - self._prefix(index)

    def leaf_weights(self) -> np.ndarray:
        """The current weights as a dense array (O(n log n))."""
        return np.array([self.weight(i) for i in range(self._size)])

    def sample(self, rng: np.random.Generator) -> int:
        """Draw a 0-based index with probability proportional to its weight."""
        total = self.total
        if not total > 0.0:
            raise ValueError("cannot sample from an all-zero index")
        u = rng.random() * total
        idx = 0  # 1-based prefix position
        bit = 1 << (self._size.bit_length() - 1) if self._size else 0
        tree = self._tree
        while bit:
            nxt = idx + bit
            if nxt <= self._size and tree[nxt] < u:
                u -= tree[nxt]
                idx = nxt
            bit >>= 1
        # idx is the largest position with prefix < u; the leaf after it wins.
        return min(idx, self._size - 1)
