"""Shared dataset builders for the test suite."""

import numpy as np

from silsample.data import ClassSpec, ClusterSpec, Dataset, make_synthetic_dataset


def random_two_class(rng, m, n, minority_share=0.3):
    """Unstructured random dataset with two labels; no geometry implied."""
    samples = rng.normal(size=(m, n))
    labels = np.where(rng.random(m) < minority_share, "a", "b")
    if len(set(labels)) < 2:  # force both classes for tiny m
        labels[0], labels[1] = "a", "b"
    return Dataset(samples, labels, [f"f{j}" for j in range(n)])


def two_cluster(minority_count, majority_count, n=4, separation=6.0, seed=0,
                minority_label="pos", majority_label="neg", variance=1.0):
    """Two well-separated Gaussian blobs, one per class."""
    offset = separation / np.sqrt(n)
    return make_synthetic_dataset((
        ClassSpec(majority_label,
                  (ClusterSpec((0.0,) * n, (variance,) * n, majority_count),)),
        ClassSpec(minority_label,
                  (ClusterSpec((offset,) * n, (variance,) * n, minority_count),)),
    ), seed=seed)
