# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops.  Signatures mirror ``_pykernels`` exactly.

Row sums run over the sorted CSR neighbour list in ascending order,
starting from 0.0, so results do not depend on ``num_threads``.
"""

import numpy as np

from cython.parallel cimport prange
from libc.math cimport cos, fabs, NAN
from libc.stdint cimport int64_t, uint8_t


cdef inline void _row_product(const int64_t[::1] indptr, const int64_t[::1] indices,
                              const double[::1] data, const double[:, ::1] x,
                              double[:, ::1] out, Py_ssize_t i, Py_ssize_t ny) noexcept nogil:
    # out[i, :] = (W @ x)[i, :]; row i is accumulated in place
    cdef Py_ssize_t k
    cdef int64_t jj, j
    cdef double w
    for k in range(ny):
        out[i, k] = 0.0
    for jj in range(indptr[i], indptr[i + 1]):
        j = indices[jj]
        w = data[jj]
        for k in range(ny):
            out[i, k] = out[i, k] + w * x[j, k]


def operator_apply(const int64_t[::1] indptr, const int64_t[::1] indices,
                   const double[::1] data, const double[::1] diag,
                   const double[:, ::1] x, double[:, ::1] out,
                   int num_threads=1):
    """out = diag * x - W @ x for x of shape (N, Y)."""
    cdef Py_ssize_t n = x.shape[0], ny = x.shape[1]
    cdef Py_ssize_t i, k
    with nogil:
        for i in prange(n, num_threads=num_threads, schedule="static"):
            _row_product(indptr, indices, data, x, out, i, ny)
            for k in range(ny):
                out[i, k] = diag[i] * x[i, k] - out[i, k]


def euler_step(const int64_t[::1] indptr, const int64_t[::1] indices,
               const double[::1] data, const double[::1] diag,
               const double[:, ::1] x, double h, double[:, ::1] out,
               int num_threads=1):
    """out = x - h * (diag * x - W @ x)."""
    cdef Py_ssize_t n = x.shape[0], ny = x.shape[1]
    cdef Py_ssize_t i, k
    cdef double lx
    with nogil:
        for i in prange(n, num_threads=num_threads, schedule="static"):
            _row_product(indptr, indices, data, x, out, i, ny)
            for k in range(ny):
                lx = diag[i] * x[i, k] - out[i, k]
                out[i, k] = x[i, k] - h * lx


def edge_similarity(const int64_t[::1] src, const int64_t[::1] dst,
                    const double[:, ::1] theta, const double[:, ::1] steady,
                    bint unit_ratio, double zero_tol,
                    double[::1] out, uint8_t[::1] defined,
                    int num_threads=1):
    """Run-averaged symmetrised similarity per edge; NaN where undefined."""
    cdef Py_ssize_t ne = src.shape[0], ny = theta.shape[1]
    cdef Py_ssize_t e, y
    cdef int64_t i, j
    cdef double total, si, sj, ti, tj
    cdef bint ok
    with nogil:
        for e in prange(ne, num_threads=num_threads, schedule="static"):
            i = src[e]
            j = dst[e]
            total = 0.0
            ok = True
            for y in range(ny):
                ti = theta[i, y]
                tj = theta[j, y]
                if unit_ratio:
                    total = total + cos(ti - tj)
                else:
                    si = steady[i, y]
                    sj = steady[j, y]
                    if fabs(si) < zero_tol or fabs(sj) < zero_tol:
                        ok = False
                        break
                    total = total + 0.5 * (cos(ti - (si / sj) * tj) + cos(tj - (sj / si) * ti))
            if ok:
                out[e] = total / ny
                defined[e] = 1
            else:
                out[e] = NAN
                defined[e] = 0


cdef inline int64_t _find(int64_t[::1] parent, int64_t a) noexcept nogil:
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


def threshold_labels(int64_t n, const int64_t[::1] src, const int64_t[::1] dst,
                     const double[::1] sim, const uint8_t[::1] defined,
                     double threshold):
    """Union-find over edges with sim >= threshold.

    Labels are numbered by each community's smallest member.
    """
    parent_arr = np.arange(n, dtype=np.int64)
    size_arr = np.ones(n, dtype=np.int64)
    labels_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] parent = parent_arr
    cdef int64_t[::1] size = size_arr
    cdef int64_t[::1] labels = labels_arr
    cdef Py_ssize_t e, ne = src.shape[0]
    cdef int64_t a, b, i, r, nxt = 0
    with nogil:
        for e in range(ne):
            if defined[e] and sim[e] >= threshold:
                a = _find(parent, src[e])
                b = _find(parent, dst[e])
                if a != b:
                    if size[a] < size[b]:
                        a, b = b, a
                    parent[b] = a
                    size[a] += size[b]
        for i in range(n):
            r = _find(parent, i)
            if labels[r] < 0:
                labels[r] = nxt
                nxt += 1
            labels[i] = labels[r]
    return labels_arr
