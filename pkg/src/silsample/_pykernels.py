"""NumPy implementations of the distance kernels.

Fallback backend used when the compiled extension is unavailable. Squared
distances accumulate feature-by-feature so neighbor ordering is bit-identical
to the compiled scan.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_CHUNK = 256


def _as_matrix(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _sq_dists(queries, refs):
    """(q, m) squared Euclidean distances, sequential accumulation over features."""
    acc = np.zeros((queries.shape[0], refs.shape[0]))
    for j in range(refs.shape[1]):
        diff = queries[:, j, None] - refs[None, :, j]
        acc += diff * diff
    return acc


def nn1_indices(refs, queries):
    """Index of the nearest reference per query; exact ties go to the lower index."""
    refs = _as_matrix(refs)
    queries = _as_matrix(queries)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for start in range(0, queries.shape[0], _CHUNK):
        chunk = queries[start : start + _CHUNK]
        out[start : start + chunk.shape[0]] = np.argmin(_sq_dists(chunk, refs), axis=1)
    return out


def knn_indices(refs, queries, k):
    """(q, k) indices of the k nearest references, ordered by (distance, index)."""
    refs = _as_matrix(refs)
    queries = _as_matrix(queries)
    out = np.empty((queries.shape[0], k), dtype=np.int64)
    for start in range(0, queries.shape[0], _CHUNK):
        chunk = queries[start : start + _CHUNK]
        d2 = _sq_dists(chunk, refs)
        # stable sort keeps the lower index first on exact distance ties
        out[start : start + chunk.shape[0]] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def pairwise_distances(x):
    """Full (m, m) Euclidean distance matrix."""
    x = _as_matrix(x)
    out = np.empty((x.shape[0], x.shape[0]))
    for start in range(0, x.shape[0], _CHUNK):
        chunk = x[start : start + _CHUNK]
        out[start : start + chunk.shape[0]] = np.sqrt(_sq_dists(chunk, x))
    return out


def class_distance_sums(x, class_ids):
    """(m, 2) sums of distances from each sample to all samples of class 0 and 1.

    The zero self-distance lands in the sample's own class column.
    """
    x = _as_matrix(x)
    ids = np.asarray(class_ids, dtype=np.int64)
    masks = np.stack([(ids == 0).astype(np.float64), (ids == 1).astype(np.float64)], axis=1)
    out = np.empty((x.shape[0], 2))
    for start in range(0, x.shape[0], _CHUNK):
        chunk = x[start : start + _CHUNK]
        out[start : start + chunk.shape[0]] = np.sqrt(_sq_dists(chunk, x)) @ masks
    return out
