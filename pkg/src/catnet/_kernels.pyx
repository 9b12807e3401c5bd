# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: family-ordering search and robust-phase stage combination.

Semantics match :mod:`catnet._kernels_py` exactly; see that module for the
reference description of each routine.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, M_PI

cnp.import_array()

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32

cdef i64 _INF = 1 << 40


cdef void _dfs(i64 n, i64 depth, i64 last, i64 partial, i64[:, ::1] dist,
               i64[::1] end, char* used, i64* path, i64* best, i64* best_path) nogil:
    cdef i64 i, c
    if depth == n:
        c = partial + end[last]
        if c < best[0]:
            best[0] = c
            for i in range(n):
                best_path[i] = path[i]
        return
    for i in range(n):
        if used[i]:
            continue
        c = partial + dist[last, i]
        if c >= best[0]:
            continue
        used[i] = 1
        path[depth] = i
        _dfs(n, depth + 1, i, c, dist, end, used, path, best, best_path)
        used[i] = 0


def brute_order(dist, start, end):
    cdef i64[:, ::1] D = np.ascontiguousarray(dist, dtype=np.int64)
    cdef i64[::1] S = np.ascontiguousarray(start, dtype=np.int64)
    cdef i64[::1] E = np.ascontiguousarray(end, dtype=np.int64)
    cdef i64 n = D.shape[0]
    if n == 0:
        return 0, []
    used_arr = np.zeros(n, dtype=np.int8)
    path_arr = np.zeros(n, dtype=np.int64)
    best_path_arr = np.arange(n, dtype=np.int64)
    cdef char[::1] used = used_arr.view(np.uint8).view('b')
    cdef i64[::1] path = path_arr
    cdef i64[::1] best_path = best_path_arr
    cdef i64 best = _INF
    cdef i64 i
    for i in range(n):
        if S[i] >= best:
            continue
        used[i] = 1
        path[0] = i
        _dfs(n, 1, i, S[i], D, E, &used[0], &path[0], &best, &best_path[0])
        used[i] = 0
    return int(best), [int(v) for v in best_path_arr]


def held_karp_order(dist, start, end):
    cdef i64[:, ::1] D = np.ascontiguousarray(dist, dtype=np.int64)
    cdef i64[::1] S = np.ascontiguousarray(start, dtype=np.int64)
    cdef i64[::1] E = np.ascontiguousarray(end, dtype=np.int64)
    cdef Py_ssize_t n = D.shape[0]
    if n == 0:
        return 0, []
    cdef Py_ssize_t full = (1 << n) - 1
    dp_arr = np.full(((<Py_ssize_t>1) << n) * n, 1 << 30, dtype=np.int32)
    cdef i32[::1] dp = dp_arr
    cdef Py_ssize_t mask, j, i, prev
    cdef i32 best, c
    for j in range(n):
        dp[(1 << j) * n + j] = <i32>S[j]
    with nogil:
        for mask in range(1, full + 1):
            for j in range(n):
                if not (mask >> j) & 1:
                    continue
                prev = mask ^ (1 << j)
                if prev == 0:
                    continue
                best = dp[mask * n + j]
                for i in range(n):
                    if (prev >> i) & 1:
                        c = dp[prev * n + i] + <i32>D[i, j]
                        if c < best:
                            best = c
                dp[mask * n + j] = best
    cdef i32 total = 1 << 30
    cdef Py_ssize_t last = 0
    for j in range(n):
        c = dp[full * n + j] + <i32>E[j]
        if c < total:
            total = c
            last = j
    order = [int(last)]
    mask = full
    j = last
    while mask != (1 << j):
        prev = mask ^ (1 << j)
        for i in range(n):
            if (prev >> i) & 1 and dp[prev * n + i] + D[i, j] == dp[mask * n + j]:
                break
        order.append(int(i))
        mask = prev
        j = i
    order.reverse()
    return int(total), order


def combine_stages_batch(phi_tilde, M):
    """Row-wise stage combination; nearest candidate in closed form, ties to smaller n."""
    cdef double[:, ::1] P = np.ascontiguousarray(np.atleast_2d(phi_tilde), dtype=np.float64)
    cdef i64[::1] Ms = np.ascontiguousarray(M, dtype=np.int64)
    cdef Py_ssize_t trials = P.shape[0], K = P.shape[1]
    out_arr = np.empty(trials, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t t, j
    cdef double est, x, n, m
    cdef double two_pi = 2.0 * M_PI
    with nogil:
        for t in range(trials):
            est = P[t, 0]
            for j in range(1, K):
                m = <double>Ms[j]
                x = (m * est - P[t, j]) / two_pi
                n = ceil(x - 0.5)
                if n < 0:
                    n = 0
                elif n > m - 1:
                    n = m - 1
                est = (P[t, j] + two_pi * n) / m
            out[t] = est
    return out_arr
