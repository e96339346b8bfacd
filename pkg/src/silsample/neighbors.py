"""Euclidean distance, brute-force k-nearest-neighbor queries, and the 1NN classifier."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from silsample import kernels
from silsample.data import DataInvariantError, Dataset


def euclidean_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataInvariantError("vectors must have equal length")
    if not (np.isfinite(a).all() and np.isfinite(b).all()):
        raise DataInvariantError("vectors contain NaN or Inf")
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


@dataclass(frozen=True)
class NeighborIndex:
    """Immutable brute-force index over a reference set.

    Exact ties in distance resolve to the lower reference index, so queries are
    deterministic and independent of any seed.
    """

    samples: np.ndarray
    labels: np.ndarray
    metric: str = "euclidean"

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=object)
        if samples.ndim != 2 or samples.shape[0] < 1:
            raise DataInvariantError("reference set must be a non-empty matrix")
        if labels.shape[0] != samples.shape[0]:
            raise DataInvariantError("reference labels length mismatch")
        if self.metric != "euclidean":
            raise DataInvariantError(f"unsupported metric {self.metric!r}")
        samples.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_dataset(cls, d: Dataset) -> "NeighborIndex":
        return cls(d.samples, d.labels)

    @property
    def size(self) -> int:
        return self.samples.shape[0]


def _check_query(idx: NeighborIndex, query) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64).ravel()
    if q.shape[0] != idx.samples.shape[1]:
        raise DataInvariantError("query dimensionality does not match the reference set")
    if not np.isfinite(q).all():
        raise DataInvariantError("query contains NaN or Inf")
    return q


def kneighbors(idx: NeighborIndex, query, k: int) -> np.ndarray:
    """Indices of the k nearest references, ordered by (distance, index)."""
    q = _check_query(idx, query)
    if not (1 <= k <= idx.size):
        raise DataInvariantError(f"k={k} out of range for {idx.size} references")
    return kernels.knn_indices(idx.samples, q[None, :], k)[0]


def knn_classify(idx: NeighborIndex, query, k: int):
    """Majority label among the k nearest references; k must be odd."""
    if k % 2 == 0:
        raise DataInvariantError("k must be odd to avoid voting ties")
    if k > idx.size:
        raise DataInvariantError(f"k={k} exceeds the reference count {idx.size}")
    votes = Counter(idx.labels[i] for i in kneighbors(idx, query, k))
    # deterministic even if ever used with >2 labels: count, then lexicographic
    return sorted(votes, key=lambda lab: (-votes[lab], lab))[0]


def nn1_classify(idx: NeighborIndex, query):
    """Label of the single nearest reference."""
    q = _check_query(idx, query)
    return idx.labels[kernels.nn1_indices(idx.samples, q[None, :])[0]]


def nn1_classify_batch(idx: NeighborIndex, queries) -> np.ndarray:
    """Vectorized nn1_classify over query rows."""
    q = np.ascontiguousarray(queries, dtype=np.float64)
    if q.ndim != 2 or q.shape[1] != idx.samples.shape[1]:
        raise DataInvariantError("query dimensionality does not match the reference set")
    return idx.labels[kernels.nn1_indices(idx.samples, q)]
