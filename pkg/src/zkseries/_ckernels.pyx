# cython: language_level=3
"""Compiled kernels: alignment dynamic programs and the three-square sweep.

Contract is identical to ``_pykernels``.  Inputs are int64 arrays and every
accumulation is int64; ``zkseries.kernels`` only routes instances here
after checking that the worst-case cost fits.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport int64_t, int32_t, int8_t

cnp.import_array()

cdef int64_t NONE = -1

cdef inline int64_t _local(const int64_t[:, ::1] a, Py_ssize_t i,
                           const int64_t[:, ::1] b, Py_ssize_t j,
                           int kind) noexcept nogil:
    cdef Py_ssize_t k, m = a.shape[1]
    cdef int64_t acc = 0, d
    for k in range(m):
        d = a[i, k] - b[j, k]
        if d < 0:
            d = -d
        if kind == 0:
            acc += d
        elif kind == 1:
            acc += d * d
        elif d > acc:
            acc = d
    return acc


def local(a, b, int kind):
    cdef const int64_t[:, ::1] av = np.ascontiguousarray(a, dtype=np.int64).reshape(1, -1)
    cdef const int64_t[:, ::1] bv = np.ascontiguousarray(b, dtype=np.int64).reshape(1, -1)
    return _local(av, 0, bv, 0, kind)


def warp(x, y, int local_kind, int series_kind, int64_t lam, Py_ssize_t band):
    cdef const int64_t[:, ::1] xv = np.ascontiguousarray(x, dtype=np.int64)
    cdef const int64_t[:, ::1] yv = np.ascontiguousarray(y, dtype=np.int64)
    cdef Py_ssize_t n = xv.shape[0], m = yv.shape[0]
    cdef cnp.ndarray[int64_t, ndim=2] cost_a = np.full((n, m), NONE, dtype=np.int64)
    cdef cnp.ndarray[int8_t, ndim=2] move_a = np.zeros((n, m), dtype=np.int8)
    cdef int64_t[:, ::1] cost = cost_a
    cdef int8_t[:, ::1] move = move_a
    cdef cnp.ndarray[int64_t, ndim=1] dx_a = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[int64_t, ndim=1] dy_a = np.zeros(m, dtype=np.int64)
    cdef int64_t[::1] dx = dx_a
    cdef int64_t[::1] dy = dy_a
    cdef Py_ssize_t i, j, lo, hi
    cdef int64_t d, p, c, best
    cdef int8_t how

    with nogil:
        if series_kind == 3:
            for i in range(1, n):
                dx[i] = lam + _local(xv, i, xv, i - 1, local_kind)
            for j in range(1, m):
                dy[j] = lam + _local(yv, j, yv, j - 1, local_kind)
        for i in range(n):
            if band >= 0:
                lo = i - band if i > band else 0
                hi = i + band + 1 if i + band + 1 < m else m
            else:
                lo = 0
                hi = m
            for j in range(lo, hi):
                d = _local(xv, i, yv, j, local_kind)
                if i == 0 and j == 0:
                    cost[0, 0] = d
                    continue
                best = NONE
                how = 0
                if i > 0 and j > 0 and cost[i - 1, j - 1] != NONE:
                    p = cost[i - 1, j - 1]
                    if series_kind == 1:
                        c = p + d
                    elif series_kind == 2:
                        c = p if p > d else d
                    else:
                        c = p + d + _local(xv, i - 1, yv, j - 1, local_kind)
                    best = c
                    how = 1
                if i > 0 and cost[i - 1, j] != NONE:
                    p = cost[i - 1, j]
                    if series_kind == 1:
                        c = p + d
                    elif series_kind == 2:
                        c = p if p > d else d
                    else:
                        c = p + dx[i]
                    if best == NONE or c < best:
                        best = c
                        how = 2
                if j > 0 and cost[i, j - 1] != NONE:
                    p = cost[i, j - 1]
                    if series_kind == 1:
                        c = p + d
                    elif series_kind == 2:
                        c = p if p > d else d
                    else:
                        c = p + dy[j]
                    if best == NONE or c < best:
                        best = c
                        how = 3
                cost[i, j] = best
                move[i, j] = how

    if cost[n - 1, m - 1] == NONE:
        raise ValueError("band too narrow to connect the endpoints")
    ii = [n - 1]
    jj = [m - 1]
    i = n - 1
    j = m - 1
    while i or j:
        how = move[i, j]
        if how == 1:
            i -= 1
            j -= 1
        elif how == 2:
            i -= 1
        else:
            j -= 1
        ii.append(i)
        jj.append(j)
    ii.reverse()
    jj.reverse()
    return int(cost[n - 1, m - 1]), ii, jj


cdef inline int64_t _isqrt(int64_t v) noexcept nogil:
    cdef int64_t t = <int64_t>sqrt(<double>v)
    while t * t > v:
        t -= 1
    while (t + 1) * (t + 1) <= v:
        t += 1
    return t


def sweep_three_squares(int64_t n, const int32_t[::1] table):
    cdef int64_t limit = table.shape[0] - 1
    cdef int64_t s, r, t, a
    cdef int found = 0
    with nogil:
        s = _isqrt(n)
        while s >= 0:
            r = n - s * s
            if r > limit:
                break
            t = _isqrt(r)
            if t * t == r:
                found = 1
                a = t
                t = 0
                break
            a = table[r]
            if a >= 0:
                found = 1
                t = _isqrt(r - a * a)
                break
            s -= 1
    if found:
        return s, a, t
    return -1, s, 0
