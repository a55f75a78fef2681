"""Pure-Python spatial kernels. Reference implementation and fallback for ``_kernels``."""

from __future__ import annotations

import math

import numpy as np


def build_csr(xs, ys, cell_size, half_side):
    """Bucket points into a square grid; return (ncell, cell_start, cell_items)."""
    ncell = max(1, int(math.ceil(2.0 * half_side / cell_size)))
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    cx = np.clip(((xs + half_side) / cell_size).astype(np.int64), 0, ncell - 1)
    cy = np.clip(((ys + half_side) / cell_size).astype(np.int64), 0, ncell - 1)
    cell = cy * ncell + cx
    order = np.argsort(cell, kind="stable").astype(np.int64)
    counts = np.bincount(cell, minlength=ncell * ncell)
    start = np.zeros(ncell * ncell + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return ncell, start, order


def collision_pairs(xs, ys, radius, half_side):
    """All index pairs (i, j), i < j, whose centres are strictly closer than ``radius``.

    Sorted lexicographically.
    """
    n = len(xs)
    r2 = radius * radius
    ncell = max(1, int(math.ceil(2.0 * half_side / radius)))
    buckets: dict[tuple[int, int], list[int]] = {}
    cells = []
    for i in range(n):
        cx = min(max(int((xs[i] + half_side) / radius), 0), ncell - 1)
        cy = min(max(int((ys[i] + half_side) / radius), 0), ncell - 1)
        cells.append((cx, cy))
        buckets.setdefault((cx, cy), []).append(i)
    pairs = []
    for i in range(n):
        cx, cy = cells[i]
        xi = xs[i]
        yi = ys[i]
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for j in buckets.get((gx, gy), ()):
                    if j <= i:
                        continue
                    dx = xs[j] - xi
                    dy = ys[j] - yi
                    if dx * dx + dy * dy < r2:
                        pairs.append((i, j))
    pairs.sort()
    return pairs


class TargetGrid:
    """Static target positions bucketed on a grid, with per-target availability."""

    def __init__(self, xs, ys, cell_size, half_side):
        self.ncell, start, order = build_csr(xs, ys, cell_size, half_side)
        self.cell_size = float(cell_size)
        self.half_side = float(half_side)
        self._start = start.tolist()
        self._items = order.tolist()
        self._x = [float(v) for v in xs]
        self._y = [float(v) for v in ys]
        self._avail = [True] * len(self._x)
        self.n_available = len(self._x)

    def _cell_range(self, v, r):
        lo = int((v - r + self.half_side) / self.cell_size)
        hi = int((v + r + self.half_side) / self.cell_size)
        return max(lo, 0), min(hi, self.ncell - 1)

    def within(self, x, y, r):
        """Available target ids with distance <= r, ascending."""
        out = []
        r2 = r * r
        x0, x1 = self._cell_range(x, r)
        y0, y1 = self._cell_range(y, r)
        start, items, tx, ty, avail = self._start, self._items, self._x, self._y, self._avail
        for gy in range(y0, y1 + 1):
            row = gy * self.ncell
            for gx in range(x0, x1 + 1):
                c = row + gx
                for k in range(start[c], start[c + 1]):
                    t = items[k]
                    if avail[t]:
                        dx = tx[t] - x
                        dy = ty[t] - y
                        if dx * dx + dy * dy <= r2:
                            out.append(t)
        out.sort()
        return out

    def nearest_within(self, x, y, r):
        """Id of the closest available target within r (lowest id on ties), or -1."""
        best = -1
        best_d2 = r * r
        x0, x1 = self._cell_range(x, r)
        y0, y1 = self._cell_range(y, r)
        start, items, tx, ty, avail = self._start, self._items, self._x, self._y, self._avail
        for gy in range(y0, y1 + 1):
            row = gy * self.ncell
            for gx in range(x0, x1 + 1):
                c = row + gx
                for k in range(start[c], start[c + 1]):
                    t = items[k]
                    if avail[t]:
                        dx = tx[t] - x
                        dy = ty[t] - y
                        d2 = dx * dx + dy * dy
                        if d2 < best_d2 or (d2 == best_d2 and (best < 0 or t < best)):
                            best = t
                            best_d2 = d2
        return best

    def count_within(self, x, y, r, exclude=-1):
        return sum(1 for t in self.within(x, y, r) if t != exclude)

    def remove(self, t):
        if not self._avail[t]:
            raise KeyError(f"target {t} already removed")
        self._avail[t] = False
        self.n_available -= 1

    def is_available(self, t):
        return self._avail[t]

    def position(self, t):
        return self._x[t], self._y[t]
