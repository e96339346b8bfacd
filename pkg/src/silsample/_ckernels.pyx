# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled distance kernels: brute-force neighbor scans and silhouette sums.

Same contracts as _pykernels; squared distances accumulate feature-by-feature
so neighbor ordering is bit-identical to the NumPy fallback.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

BACKEND = "cython"


cdef inline double _sq_dist(const double[:, ::1] a, Py_ssize_t i,
                            const double[:, ::1] b, Py_ssize_t j) noexcept nogil:
    cdef double acc = 0.0, diff
    cdef Py_ssize_t f
    for f in range(a.shape[1]):
        diff = a[i, f] - b[j, f]
        acc = acc + diff * diff
    return acc


def nn1_indices(refs, queries):
    """Index of the nearest reference per query; exact ties go to the lower index."""
    cdef const double[:, ::1] r = np.ascontiguousarray(refs, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    out = np.empty(q.shape[0], dtype=np.int64)
    cdef long long[::1] o = out
    cdef Py_ssize_t i, j
    cdef double best, d
    cdef Py_ssize_t best_j
    with nogil:
        for i in range(q.shape[0]):
            best = _sq_dist(q, i, r, 0)
            best_j = 0
            for j in range(1, r.shape[0]):
                d = _sq_dist(q, i, r, j)
                if d < best:
                    best = d
                    best_j = j
            o[i] = best_j
    return out


def knn_indices(refs, queries, k):
    """(q, k) indices of the k nearest references, ordered by (distance, index)."""
    cdef const double[:, ::1] r = np.ascontiguousarray(refs, dtype=np.float64)
    cdef const double[:, ::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef Py_ssize_t kk = k
    out = np.empty((q.shape[0], kk), dtype=np.int64)
    cdef long long[:, ::1] o = out
    best_d_arr = np.empty(kk, dtype=np.float64)
    cdef double[::1] best_d = best_d_arr
    cdef Py_ssize_t i, j, p, filled
    cdef double d
    with nogil:
        for i in range(q.shape[0]):
            filled = 0
            for j in range(r.shape[0]):
                d = _sq_dist(q, i, r, j)
                if filled < kk:
                    p = filled
                    filled += 1
                elif d < best_d[kk - 1]:
                    p = kk - 1
                else:
                    continue
                # shift strictly-larger entries right; equal distances keep
                # the earlier (lower) index first
                while p > 0 and best_d[p - 1] > d:
                    best_d[p] = best_d[p - 1]
                    o[i, p] = o[i, p - 1]
                    p -= 1
                best_d[p] = d
                o[i, p] = j
    return out


def pairwise_distances(x):
    """Full (m, m) Euclidean distance matrix."""
    cdef const double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = a.shape[0]
    out = np.zeros((m, m))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double d
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                d = sqrt(_sq_dist(a, i, a, j))
                o[i, j] = d
                o[j, i] = d
    return out


def class_distance_sums(x, class_ids):
    """(m, 2) sums of distances from each sample to all samples of class 0 and 1."""
    cdef const double[:, ::1] a = np.ascontiguousarray(x, dtype=np.float64)
    cdef const long long[::1] ids = np.ascontiguousarray(class_ids, dtype=np.int64)
    cdef Py_ssize_t m = a.shape[0]
    out = np.zeros((m, 2))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef double d
    with nogil:
        for i in range(m):
            for j in range(i + 1, m):
                d = sqrt(_sq_dist(a, i, a, j))
                o[i, ids[j]] += d
                o[j, ids[i]] += d
    return out
