"""Dataset container, CSV ingestion, splitting, class accounting and feature statistics."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field

import numpy as np


class DataInvariantError(ValueError):
    """A dataset or argument violates one of the documented invariants."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with binary labels.

    samples : (m, n) float64 matrix, all finite; m may be zero (the empty
              result of a removal or generation step)
    labels  : length-m array of class tags (coerced to str); at most two
              distinct values
    feature_names : n column names
    """

    samples: np.ndarray
    labels: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise DataInvariantError("samples must be a 2-D matrix")
        m, n = samples.shape
        if n < 1:
            raise DataInvariantError("dataset needs at least one feature")
        if not np.isfinite(samples).all():
            raise DataInvariantError("samples contain NaN or Inf")
        labels = np.asarray([str(v) for v in np.asarray(self.labels).ravel()], dtype=object)
        if labels.shape[0] != m:
            raise DataInvariantError("labels length does not match sample count")
        if len(set(labels)) > 2:
            raise DataInvariantError("more than two classes")
        names = tuple(str(f) for f in self.feature_names)
        if len(names) != n:
            raise DataInvariantError("feature_names length does not match feature count")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "labels", _frozen(labels))
        object.__setattr__(self, "feature_names", names)

    @property
    def m(self) -> int:
        return self.samples.shape[0]

    @property
    def n(self) -> int:
        return self.samples.shape[1]

    def label_values(self) -> tuple:
        """Distinct label values in first-seen order."""
        seen = []
        for v in self.labels:
            if v not in seen:
                seen.append(v)
        return tuple(seen)

    def take(self, indices) -> "Dataset":
        """Row subset (copy) in the given index order."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.samples[idx], self.labels[idx], self.feature_names)


def concat_datasets(a: Dataset, b: Dataset) -> Dataset:
    if a.feature_names != b.feature_names:
        raise DataInvariantError("feature names differ, refusing to concatenate")
    return Dataset(
        np.vstack([a.samples, b.samples]),
        np.concatenate([a.labels, b.labels]),
        a.feature_names,
    )


@dataclass(frozen=True)
class ClassCounts:
    m_min: int
    m_max: int
    minority_label: str
    majority_label: str


def class_counts(d: Dataset) -> ClassCounts:
    """Count both classes; ties go to the lexicographically smaller label as minority."""
    values = sorted(set(d.labels))
    if len(values) < 2:
        raise DataInvariantError("single-class dataset")
    a, b = values
    ca = int(np.sum(d.labels == a))
    cb = d.m - ca
    if ca <= cb:  # tie falls to the lexicographically smaller label
        return ClassCounts(ca, cb, a, b)
    return ClassCounts(cb, ca, b, a)


def imbalance_degree(d: Dataset) -> float:
    """Minority/majority count ratio, in (0, 1]; 1 means balanced."""
    c = class_counts(d)
    return c.m_min / c.m_max


@dataclass(frozen=True)
class FeatureStats:
    means: np.ndarray
    std_devs: np.ndarray
    weighted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(np.asarray(self.means, dtype=np.float64)))
        object.__setattr__(self, "std_devs", _frozen(np.asarray(self.std_devs, dtype=np.float64)))
        if self.means.shape != self.std_devs.shape or self.means.ndim != 1:
            raise DataInvariantError("means and std_devs must be equal-length vectors")
        if (self.std_devs < 0).any():
            raise DataInvariantError("negative standard deviation")


def feature_stats(samples) -> FeatureStats:
    """Per-column mean and population standard deviation (divide by m)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataInvariantError("need at least 2 rows to compute feature statistics")
    if not np.isfinite(x).all():
        raise DataInvariantError("samples contain NaN or Inf")
    return FeatureStats(x.mean(axis=0), x.std(axis=0, ddof=0), weighted=False)


def weighted_feature_stats(samples, weights) -> FeatureStats:
    """Weighted per-column mean and standard deviation.

    mean_f = sum(w_i * x_if) / sum(w_i)
    std_f  = sqrt(sum(w_i * (x_if - mean_f)^2) / sum(w_i))
    """
    x = np.asarray(samples, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise DataInvariantError("need at least 2 rows to compute feature statistics")
    if w.shape != (x.shape[0],):
        raise DataInvariantError("weights length does not match row count")
    if not np.isfinite(x).all() or not np.isfinite(w).all():
        raise DataInvariantError("samples or weights contain NaN or Inf")
    if (w < 0).any():
        raise DataInvariantError("negative weight")
    total = w.sum()
    if total <= 0:
        raise DataInvariantError("all-zero weights")
    means = (x * w[:, None]).sum(axis=0) / total
    var = (w[:, None] * (x - means) ** 2).sum(axis=0) / total
    return FeatureStats(means, np.sqrt(var), weighted=True)


@dataclass(frozen=True)
class SplitSpec:
    """Three-way split: test_fraction of the whole, then validation_fraction of the
    remaining training block; the rest is the learning set."""

    train_fraction: float = 0.85
    test_fraction: float = 0.15
    validation_fraction: float = 0.15
    seed: int = 0

    def __post_init__(self):
        for f in (self.train_fraction, self.test_fraction, self.validation_fraction):
            if not (0.0 < f < 1.0):
                raise DataInvariantError("split fractions must lie in (0, 1)")
        if abs(self.train_fraction + self.test_fraction - 1.0) > 1e-9:
            raise DataInvariantError("train_fraction + test_fraction must equal 1")


def _largest_remainder(counts, total_take):
    """Per-class take sizes summing exactly to total_take, proportional to counts."""
    counts = np.asarray(counts, dtype=np.int64)
    if total_take > counts.sum():
        raise DataInvariantError("split asks for more samples than available")
    exact = counts * (total_take / counts.sum())
    take = np.minimum(np.floor(exact).astype(np.int64), counts)
    while take.sum() < total_take:
        # hand out the remainder by largest fractional part, ties to lower index,
        # never past a class's availability
        frac = exact - take
        frac[take >= counts] = -np.inf
        take[int(np.argmax(frac))] += 1
    return take


def split(d: Dataset, spec: SplitSpec):
    """Stratified (train, validation, test) partition, deterministic given the seed."""
    rng = np.random.default_rng(spec.seed)
    values = sorted(set(d.labels))
    per_class = [np.flatnonzero(d.labels == v) for v in values]
    for idx in per_class:
        rng.shuffle(idx)

    n_test = int(round(d.m * spec.test_fraction))
    take_test = _largest_remainder([len(i) for i in per_class], n_test)
    test_idx = [i[:t] for i, t in zip(per_class, take_test)]
    rest_idx = [i[t:] for i, t in zip(per_class, take_test)]

    n_rest = d.m - n_test
    if n_rest == 0:
        raise DataInvariantError("empty split part")
    n_val = int(round(n_rest * spec.validation_fraction))
    take_val = _largest_remainder([len(i) for i in rest_idx], n_val)
    val_idx = [i[:t] for i, t in zip(rest_idx, take_val)]
    train_idx = [i[t:] for i, t in zip(rest_idx, take_val)]

    parts = []
    for chunks in (train_idx, val_idx, test_idx):
        idx = np.concatenate(chunks) if chunks else np.empty(0, dtype=np.intp)
        if len(idx) == 0:
            raise DataInvariantError("empty split part")
        rng.shuffle(idx)
        parts.append(d.take(idx))
    return parts[0], parts[1], parts[2]


def load_csv(path, label_column=None) -> Dataset:
    """Load a header-first CSV; label_column is a name, an index, or None for the
    last column. Label values become binary class tags in first-seen order."""
    if not os.path.isfile(path):
        raise DataInvariantError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataInvariantError(f"empty file: {path}") from None
        if label_column is None:
            label_pos = len(header) - 1
        elif isinstance(label_column, int):
            label_pos = label_column
            if not (0 <= label_pos < len(header)):
                raise DataInvariantError(f"label column index {label_column} out of range")
        else:
            if label_column not in header:
                raise DataInvariantError(f"label column {label_column!r} not found in header")
            label_pos = header.index(label_column)

        feature_names = [h for i, h in enumerate(header) if i != label_pos]
        rows, labels = [], []
        for rownum, cells in enumerate(reader, start=1):
            if not cells:
                continue
            if len(cells) != len(header):
                raise DataInvariantError(f"row {rownum}: expected {len(header)} cells, got {len(cells)}")
            feats = []
            for i, cell in enumerate(cells):
                if i == label_pos:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataInvariantError(
                        f"row {rownum}, column {header[i]!r}: cannot parse {cell!r} as a number"
                    ) from None
                if not np.isfinite(v):
                    raise DataInvariantError(f"row {rownum}, column {header[i]!r}: non-finite value {cell!r}")
                feats.append(v)
            rows.append(feats)
            labels.append(cells[label_pos])
    if not rows:
        raise DataInvariantError(f"empty file: {path}")
    if len(set(labels)) > 2:
        raise DataInvariantError("more than two classes in label column")
    return Dataset(np.array(rows, dtype=np.float64), labels, feature_names)


def save_csv(d: Dataset, path, label_column="label") -> None:
    """Write the dataset back to CSV with full round-trip float precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.feature_names) + [label_column])
        for row, lab in zip(d.samples, d.labels):
            writer.writerow([repr(float(v)) for v in row] + [lab])


def min_max_scale(d: Dataset) -> Dataset:
    """Optional per-feature scaling to [0, 1]; constant features map to 0."""
    lo = d.samples.min(axis=0)
    span = d.samples.max(axis=0) - lo
    span[span == 0] = 1.0
    return Dataset((d.samples - lo) / span, d.labels, d.feature_names)


@dataclass(frozen=True)
class ClusterSpec:
    mean: tuple
    variances: tuple
    count: int


@dataclass(frozen=True)
class ClassSpec:
    label: str
    clusters: tuple = field(default_factory=tuple)


def make_synthetic_dataset(classes, seed, feature_names=None) -> Dataset:
    """Gaussian-mixture test dataset: one or more diagonal-covariance clusters per class."""
    if not classes:
        raise DataInvariantError("no class specs given")
    n = len(classes[0].clusters[0].mean)
    rng = np.random.default_rng(seed)
    blocks, labels = [], []
    for cls in classes:
        if not cls.clusters:
            raise DataInvariantError(f"class {cls.label!r} has no clusters")
        for clu in cls.clusters:
            mean = np.asarray(clu.mean, dtype=np.float64)
            var = np.asarray(clu.variances, dtype=np.float64)
            if mean.shape != (n,) or var.shape != (n,):
                raise DataInvariantError("cluster mean/variances length mismatch")
            if (var < 0).any() or not np.isfinite(var).all() or not np.isfinite(mean).all():
                raise DataInvariantError("invalid covariance")
            if clu.count < 1:
                raise DataInvariantError("cluster count must be >= 1")
            blocks.append(rng.normal(mean, np.sqrt(var), size=(clu.count, n)))
            labels.extend([cls.label] * clu.count)
    names = feature_names if feature_names is not None else [f"f{j}" for j in range(n)]
    return Dataset(np.vstack(blocks), labels, names)
