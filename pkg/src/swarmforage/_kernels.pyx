# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled spatial kernels. Same API and results as ``_kernels_py``."""

from libc.math cimport ceil

import numpy as np
cimport numpy as cnp

from swarmforage._kernels_py import build_csr

cnp.import_array()


cdef inline Py_ssize_t _clampi(Py_ssize_t v, Py_ssize_t lo, Py_ssize_t hi) noexcept nogil:
    if v < lo:
        return lo
    if v > hi:
        return hi
    return v


def collision_pairs(xs, ys, double radius, double half_side):
    cdef double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] y = np.ascontiguousarray(ys, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t ncell = <Py_ssize_t>ceil(2.0 * half_side / radius)
    if ncell < 1:
        ncell = 1
    cdef double r2 = radius * radius
    cdef cnp.int64_t[::1] cx = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] cy = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t i, j, k, gx, gy, c
    cdef double dx, dy
    for i in range(n):
        cx[i] = _clampi(<Py_ssize_t>((x[i] + half_side) / radius), 0, ncell - 1)
        cy[i] = _clampi(<Py_ssize_t>((y[i] + half_side) / radius), 0, ncell - 1)
    # Counting sort of robots into cells; only occupied cells are touched.
    cdef dict head = {}
    cdef cnp.int64_t[::1] nxt = np.full(n, -1, dtype=np.int64)
    for i in range(n - 1, -1, -1):
        c = cy[i] * ncell + cx[i]
        nxt[i] = head.get(c, -1)
        head[c] = i
    pairs = []
    for i in range(n):
        for gy in range(cy[i] - 1, cy[i] + 2):
            if gy < 0 or gy >= ncell:
                continue
            for gx in range(cx[i] - 1, cx[i] + 2):
                if gx < 0 or gx >= ncell:
                    continue
                j = head.get(gy * ncell + gx, -1)
                while j >= 0:
                    if j > i:
                        dx = x[j] - x[i]
                        dy = y[j] - y[i]
                        if dx * dx + dy * dy < r2:
                            pairs.append((i, j))
                    j = nxt[j]
    pairs.sort()
    return pairs


cdef class TargetGrid:
    cdef public Py_ssize_t ncell
    cdef public double cell_size
    cdef public double half_side
    cdef public Py_ssize_t n_available
    cdef cnp.int64_t[::1] _start
    cdef cnp.int64_t[::1] _items
    cdef double[::1] _x
    cdef double[::1] _y
    cdef unsigned char[::1] _avail

    def __init__(self, xs, ys, double cell_size, double half_side):
        ncell, start, order = build_csr(xs, ys, cell_size, half_side)
        self.ncell = ncell
        self.cell_size = cell_size
        self.half_side = half_side
        self._start = start
        self._items = order
        self._x = np.ascontiguousarray(xs, dtype=np.float64)
        self._y = np.ascontiguousarray(ys, dtype=np.float64)
        self._avail = np.ones(self._x.shape[0], dtype=np.uint8)
        self.n_available = self._x.shape[0]

    cdef inline void _range(self, double v, double r, Py_ssize_t* lo, Py_ssize_t* hi) noexcept nogil:
        lo[0] = _clampi(<Py_ssize_t>((v - r + self.half_side) / self.cell_size), 0, self.ncell - 1)
        hi[0] = _clampi(<Py_ssize_t>((v + r + self.half_side) / self.cell_size), 0, self.ncell - 1)

    def within(self, double x, double y, double r):
        cdef Py_ssize_t x0, x1, y0, y1, gx, gy, c, k, t
        cdef double dx, dy, r2 = r * r
        out = []
        # A negative low edge truncates toward zero, matching int() in the fallback.
        self._range(x, r, &x0, &x1)
        self._range(y, r, &y0, &y1)
        for gy in range(y0, y1 + 1):
            for gx in range(x0, x1 + 1):
                c = gy * self.ncell + gx
                for k in range(self._start[c], self._start[c + 1]):
                    t = self._items[k]
                    if self._avail[t]:
                        dx = self._x[t] - x
                        dy = self._y[t] - y
                        if dx * dx + dy * dy <= r2:
                            out.append(t)
        out.sort()
        return out

    def nearest_within(self, double x, double y, double r):
        cdef Py_ssize_t x0, x1, y0, y1, gx, gy, c, k, t
        cdef Py_ssize_t best = -1
        cdef double dx, dy, d2, best_d2 = r * r
        self._range(x, r, &x0, &x1)
        self._range(y, r, &y0, &y1)
        for gy in range(y0, y1 + 1):
            for gx in range(x0, x1 + 1):
                c = gy * self.ncell + gx
                for k in range(self._start[c], self._start[c + 1]):
                    t = self._items[k]
                    if self._avail[t]:
                        dx = self._x[t] - x
                        dy = self._y[t] - y
                        d2 = dx * dx + dy * dy
                        if d2 < best_d2 or (d2 == best_d2 and (best < 0 or t < best)):
                            best = t
                            best_d2 = d2
        return best

    def count_within(self, double x, double y, double r, Py_ssize_t exclude=-1):
        cdef Py_ssize_t x0, x1, y0, y1, gx, gy, c, k, t, n = 0
        cdef double dx, dy, r2 = r * r
        self._range(x, r, &x0, &x1)
        self._range(y, r, &y0, &y1)
        for gy in range(y0, y1 + 1):
            for gx in range(x0, x1 + 1):
                c = gy * self.ncell + gx
                for k in range(self._start[c], self._start[c + 1]):
                    t = self._items[k]
                    if t != exclude and self._avail[t]:
                        dx = self._x[t] - x
                        dy = self._y[t] - y
                        if dx * dx + dy * dy <= r2:
                            n += 1
        return n

    def remove(self, Py_ssize_t t):
        if not self._avail[t]:
            raise KeyError(f"target {t} already removed")
        self._avail[t] = 0
        self.n_available -= 1

    def is_available(self, Py_ssize_t t):
        return bool(self._avail[t])

    def position(self, Py_ssize_t t):
        return self._x[t], self._y[t]
