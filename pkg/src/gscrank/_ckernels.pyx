# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for block matching, aggregation and adaptive median
filtering. Semantics match ``_pykernels`` exactly; see that module for the
reference behaviour."""

import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()


def block_match(image, refs, int patch_side, int radius, int group_size):
    cdef const double[:, ::1] img = np.ascontiguousarray(image, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] ref = np.ascontiguousarray(
        np.asarray(refs, dtype=np.int64).reshape(-1, 2))
    cdef Py_ssize_t n = ref.shape[0]
    cdef int p = patch_side
    cdef int n_rows = img.shape[0] - p + 1
    cdef int n_cols = img.shape[1] - p + 1

    origins_arr = np.empty((n, group_size, 2), dtype=np.int64)
    dist_arr = np.empty((n, group_size), dtype=np.float64)
    padded_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[:, :, ::1] origins = origins_arr
    cdef double[:, ::1] dists = dist_arr
    cdef cnp.uint8_t[::1] padded = padded_arr

    cdef double* top_d = <double*> malloc(group_size * sizeof(double))
    cdef int* top_r = <int*> malloc(group_size * sizeof(int))
    cdef int* top_c = <int*> malloc(group_size * sizeof(int))
    if top_d == NULL or top_r == NULL or top_c == NULL:
        free(top_d); free(top_r); free(top_c)
        raise MemoryError()

    cdef Py_ssize_t g
    cdef int r0, c0, dy, dx, rr, cc, i, j, m, pos, count, k
    cdef double d, diff
    try:
        with nogil:
            for g in range(n):
                r0 = <int> ref[g, 0]
                c0 = <int> ref[g, 1]
                m = 0
                count = 0
                for dy in range(-radius, radius + 1):
                    rr = r0 + dy
                    if rr < 0 or rr >= n_rows:
                        continue
                    for dx in range(-radius, radius + 1):
                        cc = c0 + dx
                        if cc < 0 or cc >= n_cols:
                            continue
                        if dy == 0 and dx == 0:
                            d = -1.0
                        else:
                            d = 0.0
                            for j in range(p):
                                for i in range(p):
                                    diff = img[rr + i, cc + j] - img[r0 + i, c0 + j]
                                    d += diff * diff
                        count += 1
                        # stable insertion into the running top-c list
                        pos = m
                        while pos > 0 and top_d[pos - 1] > d:
                            pos -= 1
                        if pos >= group_size:
                            continue
                        if m < group_size:
                            m += 1
                        k = m - 1
                        while k > pos:
                            top_d[k] = top_d[k - 1]
                            top_r[k] = top_r[k - 1]
                            top_c[k] = top_c[k - 1]
                            k -= 1
                        top_d[pos] = d
                        top_r[pos] = rr
                        top_c[pos] = cc
                if m < group_size:
                    padded[g] = 1
                    for k in range(m, group_size):
                        top_d[k] = top_d[k % m]
                        top_r[k] = top_r[k % m]
                        top_c[k] = top_c[k % m]
                for k in range(group_size):
                    origins[g, k, 0] = top_r[k]
                    origins[g, k, 1] = top_c[k]
                    dists[g, k] = top_d[k] if top_d[k] > 0.0 else 0.0
    finally:
        free(top_d); free(top_r); free(top_c)
    return origins_arr, dist_arr, padded_arr.astype(bool)


def aggregate(values, origins, int patch_side, int height, int width):
    cdef const double[:, :, ::1] val = np.ascontiguousarray(values, dtype=np.float64)
    cdef const cnp.int64_t[:, :, ::1] org = np.ascontiguousarray(origins, dtype=np.int64)
    num_arr = np.zeros(height * width, dtype=np.float64)
    den_arr = np.zeros(height * width, dtype=np.float64)
    cdef double[::1] num = num_arr
    cdef double[::1] den = den_arr
    cdef Py_ssize_t n = val.shape[0]
    cdef int bs = val.shape[1]
    cdef int c = val.shape[2]
    cdef int p = patch_side
    cdef Py_ssize_t g, idx
    cdef int k, col, di, dj
    with nogil:
        for g in range(n):
            for k in range(bs):
                di = k % p
                dj = k // p
                for col in range(c):
                    idx = (org[g, col, 0] + di) * width + org[g, col, 1] + dj
                    num[idx] += val[g, k, col]
                    den[idx] += 1.0
    return num_arr.reshape(height, width), den_arr.reshape(height, width)


cdef double _select(double* a, int n, int k) nogil:
    """k-th smallest of a[0:n] (a is permuted)."""
    cdef int lo = 0, hi = n - 1, i, j
    cdef double pivot, t
    while lo < hi:
        pivot = a[(lo + hi) // 2]
        i = lo
        j = hi
        while i <= j:
            while a[i] < pivot:
                i += 1
            while a[j] > pivot:
                j -= 1
            if i <= j:
                t = a[i]; a[i] = a[j]; a[j] = t
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            break
    return a[k]


def adaptive_median(image, int max_window, bint extremal_only=True):
    src = np.asarray(image, dtype=np.float64)
    cdef int half_max = max_window // 2
    cdef const double[:, ::1] pad = np.ascontiguousarray(
        np.pad(src, half_max, mode="symmetric"))
    cdef int h = src.shape[0]
    cdef int w = src.shape[1]
    out_arr = src.copy()
    flag_arr = np.zeros((h, w), dtype=np.uint8)
    cdef double[:, ::1] out = out_arr
    cdef cnp.uint8_t[:, ::1] flags = flag_arr
    cdef double* buf = <double*> malloc(max_window * max_window * sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef int r, c, size, hw, i, j, cnt
    cdef double z, lo, hi, med, v
    cdef bint extremal, settled
    try:
        with nogil:
            for r in range(h):
                for c in range(w):
                    z = pad[r + half_max, c + half_max]
                    extremal = z == 0.0 or z == 255.0
                    settled = False
                    med = z
                    size = 3
                    while size <= max_window:
                        hw = size // 2
                        cnt = 0
                        lo = z
                        hi = z
                        for i in range(r + half_max - hw, r + half_max + hw + 1):
                            for j in range(c + half_max - hw, c + half_max + hw + 1):
                                v = pad[i, j]
                                buf[cnt] = v
                                cnt += 1
                                if v < lo:
                                    lo = v
                                if v > hi:
                                    hi = v
                        med = _select(buf, cnt, cnt // 2)
                        if lo < med and med < hi:
                            settled = True
                            if not (lo < z and z < hi) and (extremal or not extremal_only):
                                flags[r, c] = 1
                                out[r, c] = med
                            break
                        size += 2
                    if not settled and extremal:
                        flags[r, c] = 1
                        out[r, c] = med
    finally:
        free(buf)
    return out_arr, flag_arr.astype(bool)
