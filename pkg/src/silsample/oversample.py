"""Minority oversampling: SMOTE, ADASYN, and Gaussian rejection sampling.

The Gaussian route draws candidate rows feature-wise from the minority
feature statistics, keeps a candidate only when a 1NN filter classifies it
as minority, and drops exact duplicates. Attempts are budgeted; exhausting
the budget raises with the partial batch attached.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from silsample import kernels
from silsample.data import (
    DataInvariantError,
    Dataset,
    FeatureStats,
    class_counts,
    concat_datasets,
    feature_stats,
    weighted_feature_stats,
)
from silsample.neighbors import NeighborIndex, nn1_classify_batch
from silsample.silhouette import gourmet_weights, silhouette_report

ALGORITHMS = ("smote", "adasyn", "g1no", "g1no-gourmet")


class GenerationBudgetError(RuntimeError):
    """Attempt budget exhausted before the batch filled; carries the partial batch."""

    def __init__(self, message: str, batch: "SyntheticBatch"):
        super().__init__(message)
        self.batch = batch


@dataclass(frozen=True)
class SyntheticBatch:
    """Generated rows plus the provenance needed to reproduce them."""

    samples: np.ndarray
    algorithm: str
    seed: int
    accepted_count: int
    rejected_by_1nn: int = 0
    rejected_duplicate: int = 0
    attempts: int = 0

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        if samples.ndim != 2:
            raise DataInvariantError("batch samples must be a matrix")
        if samples.shape[0] != self.accepted_count:
            raise DataInvariantError("accepted_count does not match the batch size")
        if self.attempts < self.accepted_count + self.rejected_by_1nn + self.rejected_duplicate:
            raise DataInvariantError("attempt counter below the sum of outcomes")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def provenance(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "accepted_count": self.accepted_count,
            "rejected_by_1nn": self.rejected_by_1nn,
            "rejected_duplicate": self.rejected_duplicate,
            "attempts": self.attempts,
        }


def _empty_batch(n: int, algorithm: str, seed: int) -> SyntheticBatch:
    return SyntheticBatch(np.empty((0, n)), algorithm, seed, accepted_count=0)


def _minority_neighbor_table(minority: np.ndarray, k: int) -> np.ndarray:
    """k nearest minority neighbors of each minority row, self excluded."""
    m = minority.shape[0]
    nbr = kernels.knn_indices(minority, minority, k + 1)
    table = np.empty((m, k), dtype=np.int64)
    for i in range(m):
        row = nbr[i]
        table[i] = row[row != i][:k]
    return table


def _interpolate(x: np.ndarray, u: np.ndarray, w: float) -> np.ndarray:
    # endpoint draws must reproduce the parent row bit for bit, which
    # x + 1.0 * (u - x) does not guarantee under rounding
    if w == 0.0:
        return x.copy()
    if w == 1.0:
        return u.copy()
    return x + w * (u - x)


def smote(minority, k: int, g: int, seed: int) -> SyntheticBatch:
    """g interpolations x_i + w (x_u - x_i) between minority rows.

    x_i is uniform over the minority, x_u uniform over its k nearest minority
    neighbors (self excluded), w uniform on [0, 1]. Every draw is accepted, so
    attempts == g.
    """
    minority = np.ascontiguousarray(minority, dtype=np.float64)
    if minority.ndim != 2 or minority.shape[0] < 1:
        raise DataInvariantError("empty minority set")
    m = minority.shape[0]
    if g < 0:
        raise DataInvariantError("negative sample count requested")
    if not (1 <= k < m):
        raise DataInvariantError(f"k={k} must be in [1, minority count)")
    table = _minority_neighbor_table(minority, k)
    rng = np.random.default_rng(seed)
    out = np.empty((g, minority.shape[1]), dtype=np.float64)
    for s in range(g):
        i = int(rng.integers(m))
        u = table[i, int(rng.integers(k))]
        w = rng.random()
        out[s] = _interpolate(minority[i], minority[u], w)
    return SyntheticBatch(out, "smote", seed, accepted_count=g, attempts=g)


@dataclass(frozen=True)
class AdasynAllocation:
    """Normalized difficulty ratios and the integer per-sample quotas."""

    ratios: np.ndarray
    quotas: np.ndarray

    def __post_init__(self):
        ratios = np.asarray(self.ratios, dtype=np.float64)
        quotas = np.asarray(self.quotas, dtype=np.int64)
        if ratios.shape != quotas.shape:
            raise DataInvariantError("ratio and quota length mismatch")
        if ratios.min() < 0.0:
            raise DataInvariantError("negative allocation ratio")
        if abs(float(ratios.sum()) - 1.0) > 1e-9:
            raise DataInvariantError("allocation ratios must sum to 1")
        ratios.flags.writeable = False
        quotas.flags.writeable = False
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "quotas", quotas)


def _integer_quotas(ratios: np.ndarray, g: int) -> np.ndarray:
    """Largest-remainder rounding of ratios * g; ties go to the lower index."""
    exact = ratios * g
    quotas = np.floor(exact).astype(np.int64)
    short = g - int(quotas.sum())
    frac = exact - quotas
    for _ in range(short):
        j = int(np.argmax(frac))
        quotas[j] += 1
        frac[j] = -1.0
    return quotas


def adasyn_allocation(d: Dataset, k: int, g: int) -> AdasynAllocation:
    """Difficulty per minority sample: fraction of majority among its k nearest
    neighbors in the whole dataset (self excluded), normalized, then rounded
    to integer quotas summing exactly to g.

    An all-minority neighborhood everywhere (all ratios zero) falls back to a
    uniform allocation.
    """
    cc = class_counts(d)
    if g < 0:
        raise DataInvariantError("negative sample count requested")
    if not (1 <= k <= d.m - 1):
        raise DataInvariantError(f"k={k} must be in [1, m - 1]")
    minority_idx = np.flatnonzero(d.labels == cc.minority_label)
    queries = np.ascontiguousarray(d.samples[minority_idx])
    nbr = kernels.knn_indices(d.samples, queries, k + 1)
    raw = np.empty(minority_idx.shape[0], dtype=np.float64)
    for row, global_i in enumerate(minority_idx):
        picks = nbr[row][nbr[row] != global_i][:k]
        raw[row] = float((d.labels[picks] == cc.majority_label).sum()) / k
    total = float(raw.sum())
    if total == 0.0:
        ratios = np.full(raw.shape[0], 1.0 / raw.shape[0])
    else:
        ratios = raw / total
    return AdasynAllocation(ratios, _integer_quotas(ratios, g))


def adasyn(d: Dataset, k: int, g: int, seed: int) -> SyntheticBatch:
    """ADASYN: quota per minority sample from adasyn_allocation, then
    SMOTE-style interpolation toward minority neighbors."""
    allocation = adasyn_allocation(d, k, g)
    cc = class_counts(d)
    minority = np.ascontiguousarray(d.samples[d.labels == cc.minority_label])
    if not (1 <= k < minority.shape[0]):
        raise DataInvariantError(f"k={k} must be in [1, minority count)")
    table = _minority_neighbor_table(minority, k)
    rng = np.random.default_rng(seed)
    out = np.empty((g, d.n), dtype=np.float64)
    s = 0
    for i, quota in enumerate(allocation.quotas):
        for _ in range(int(quota)):
            u = table[i, int(rng.integers(k))]
            w = rng.random()
            out[s] = minority[i] + w * (minority[u] - minority[i])
            s += 1
    return SyntheticBatch(out, "adasyn", seed, accepted_count=g, attempts=g)


@dataclass(frozen=True)
class GrngSpec:
    """How many rows to draw and from which feature statistics."""

    count: int
    stats: FeatureStats
    max_attempts_factor: int = 1000

    def __post_init__(self):
        if self.count < 1:
            raise DataInvariantError("requested count must be positive")
        if self.max_attempts_factor < 1:
            raise DataInvariantError("max_attempts_factor must be positive")


def grng(spec: GrngSpec, acceptor, dedup, seed, *, algorithm: str = "grng",
         record_seed=None) -> SyntheticBatch:
    """Rejection loop: draw feature-wise Gaussians, keep rows the acceptor
    endorses and that are not duplicates (of prior data via dedup, or of rows
    already accepted in this batch).

    The acceptor runs before the duplicate check, so the counters attribute
    each rejection to a single cause. Budget: max_attempts_factor * count
    attempts, after which GenerationBudgetError carries the partial batch.
    """
    rng = np.random.default_rng(seed)
    recorded = int(seed if record_seed is None else record_seed)
    budget = spec.max_attempts_factor * spec.count
    means = spec.stats.means
    sds = spec.stats.std_devs
    accepted: list = []
    seen: set = set()
    attempts = 0
    rej_filter = 0
    rej_dup = 0
    while len(accepted) < spec.count:
        if attempts >= budget:
            batch = SyntheticBatch(
                np.array(accepted, dtype=np.float64).reshape(len(accepted), means.shape[0]),
                algorithm, recorded, accepted_count=len(accepted),
                rejected_by_1nn=rej_filter, rejected_duplicate=rej_dup,
                attempts=attempts)
            raise GenerationBudgetError(
                f"attempt budget exhausted: accepted {len(accepted)} of "
                f"{spec.count} after {attempts} attempts", batch)
        candidate = rng.normal(means, sds)
        attempts += 1
        if not acceptor(candidate):
            rej_filter += 1
            continue
        key = candidate.tobytes()
        if key in seen or not dedup(candidate):
            rej_dup += 1
            continue
        seen.add(key)
        accepted.append(candidate)
    return SyntheticBatch(
        np.array(accepted, dtype=np.float64), algorithm, recorded,
        accepted_count=spec.count, rejected_by_1nn=rej_filter,
        rejected_duplicate=rej_dup, attempts=attempts)


def _filter_segment(train: Dataset, fraction: float, seed) -> Dataset:
    """Stratified subset used to fit the 1NN acceptance filter.

    Takes round(fraction * count) of each class, at least one row per class so
    the filter can vote for both labels.
    """
    rng = np.random.default_rng(seed)
    keep: list = []
    for value in train.label_values():
        idx = np.flatnonzero(train.labels == value)
        rng.shuffle(idx)
        take = max(1, int(round(fraction * idx.shape[0])))
        keep.append(idx[:take])
    return train.take(np.concatenate(keep))


def _train_dedup(train: Dataset):
    existing = {row.tobytes() for row in train.samples}

    def dedup(candidate: np.ndarray) -> bool:
        return candidate.tobytes() not in existing

    return dedup


def _gaussian_rebalance(train: Dataset, stats: FeatureStats, seed: int,
                        algorithm: str, max_attempts_factor: int,
                        filter_fraction: float) -> SyntheticBatch:
    cc = class_counts(train)
    need = cc.m_max - cc.m_min
    if need == 0:
        return _empty_batch(train.n, algorithm, seed)
    filter_seq, draw_seq = np.random.SeedSequence(seed).spawn(2)
    segment = _filter_segment(train, filter_fraction, filter_seq)
    index = NeighborIndex(segment.samples, segment.labels)

    def acceptor(candidate: np.ndarray) -> bool:
        return nn1_classify_batch(index, candidate[None, :])[0] == cc.minority_label

    spec = GrngSpec(need, stats, max_attempts_factor)
    return grng(spec, acceptor, _train_dedup(train), draw_seq,
                algorithm=algorithm, record_seed=seed)


def g1no(train: Dataset, seed: int, *, max_attempts_factor: int = 1000,
         filter_fraction: float = 0.75) -> SyntheticBatch:
    """Gaussian rejection sampling from the plain minority feature statistics.

    Fills the minority up to the majority count. A balanced input yields an
    empty batch without drawing anything.
    """
    cc = class_counts(train)
    if cc.m_max == cc.m_min:
        return _empty_batch(train.n, "g1no", seed)
    minority = train.samples[train.labels == cc.minority_label]
    stats = feature_stats(minority)
    return _gaussian_rebalance(train, stats, seed, "g1no",
                               max_attempts_factor, filter_fraction)


def g1no_gourmet(train: Dataset, seed: int, *, max_attempts_factor: int = 1000,
                 filter_fraction: float = 0.75) -> SyntheticBatch:
    """Like g1no, but the minority statistics are weighted by silhouette
    difficulty: hard minority samples (low coefficient) pull the Gaussian
    toward the class boundary.

    A minority whose coefficients are all equal leaves no spread to weight by,
    which is an error.
    """
    cc = class_counts(train)
    if cc.m_max == cc.m_min:
        return _empty_batch(train.n, "g1no-gourmet", seed)
    report = silhouette_report(train)
    weights = gourmet_weights(report).weights
    mask = train.labels == cc.minority_label
    w = weights[mask]
    if float(w.max()) == float(w.min()):
        raise DataInvariantError("degenerate weighting: uniform silhouette across the minority")
    stats = weighted_feature_stats(train.samples[mask], w)
    return _gaussian_rebalance(train, stats, seed, "g1no-gourmet",
                               max_attempts_factor, filter_fraction)


def rebalance(train: Dataset, algorithm: str, seed: int, *, k: int = 5,
              max_attempts_factor: int = 1000) -> tuple:
    """Generate minority rows with the named algorithm and append them.

    Returns (balanced dataset, batch). The balanced dataset has equal class
    counts; a balanced input comes back unchanged with an empty batch.
    """
    if algorithm not in ALGORITHMS:
        raise DataInvariantError(f"unknown algorithm {algorithm!r}")
    cc = class_counts(train)
    need = cc.m_max - cc.m_min
    if need == 0:
        return train, _empty_batch(train.n, algorithm, seed)
    if algorithm == "smote":
        minority = train.samples[train.labels == cc.minority_label]
        batch = smote(minority, k, need, seed)
    elif algorithm == "adasyn":
        batch = adasyn(train, k, need, seed)
    elif algorithm == "g1no":
        batch = g1no(train, seed, max_attempts_factor=max_attempts_factor)
    else:
        batch = g1no_gourmet(train, seed, max_attempts_factor=max_attempts_factor)
    labels = np.array([cc.minority_label] * need, dtype=object)
    grown = concat_datasets(train, Dataset(batch.samples, labels, train.feature_names))
    return grown, batch


def batch_to_csv(batch: SyntheticBatch, feature_names, path) -> None:
    """Feature columns plus algorithm and seed; counters go to the JSON sidecar."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(feature_names) + ["algorithm", "seed"])
        for row in batch.samples:
            writer.writerow([repr(float(v)) for v in row] + [batch.algorithm, batch.seed])


def batch_provenance_to_json(batch: SyntheticBatch, path) -> None:
    with open(path, "w") as fh:
        json.dump(batch.provenance(), fh, indent=2)
        fh.write("\n")
