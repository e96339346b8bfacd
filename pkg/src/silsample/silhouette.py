"""Silhouette coefficients over the two class labels, binning, and difficulty weights.

The two supervised classes play the role of clusters: a sample with a low or
negative coefficient sits near the opposite class and is hard to learn, one
near +1 is deep inside its own class.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from silsample import kernels
from silsample.data import DataInvariantError, Dataset

DEFAULT_BIN_THRESHOLDS = (-1.0 / 3.0, 1.0 / 3.0)
BIN_NAMES = ("near_minus_one", "near_zero", "near_plus_one")


def _class_masks(d: Dataset):
    values = d.label_values()
    if len(values) != 2:
        raise DataInvariantError("silhouette requires exactly two classes")
    return values, [d.labels == v for v in values]


def intra_dissimilarity(d: Dataset, t: int) -> float:
    """Mean distance from sample t to the other members of its own class.

    Undefined (error) when t is the only member of its class.
    """
    values, masks = _class_masks(d)
    own = masks[0] if masks[0][t] else masks[1]
    if own.sum() < 2:
        raise DataInvariantError("intra-class dissimilarity undefined for a singleton class")
    dists = np.sqrt(((d.samples[own] - d.samples[t]) ** 2).sum(axis=1))
    return float(dists.sum() / (own.sum() - 1))


def inter_dissimilarity(d: Dataset, t: int) -> float:
    """Mean distance from sample t to every member of the opposite class."""
    values, masks = _class_masks(d)
    other = masks[1] if masks[0][t] else masks[0]
    dists = np.sqrt(((d.samples[other] - d.samples[t]) ** 2).sum(axis=1))
    return float(dists.mean())


def silhouette_coefficient(d: Dataset, t: int) -> float:
    """s(t) = (b - a) / max(a, b), with s(t) = 0 for singleton classes and a = b."""
    values, masks = _class_masks(d)
    own = masks[0] if masks[0][t] else masks[1]
    if own.sum() < 2:
        return 0.0
    a = intra_dissimilarity(d, t)
    b = inter_dissimilarity(d, t)
    if a == b:
        return 0.0
    return (b - a) / max(a, b)


def silhouette_values(d: Dataset) -> np.ndarray:
    """All m coefficients in one pass over the pairwise distances."""
    values, masks = _class_masks(d)
    class_ids = np.where(masks[1], 1, 0).astype(np.int64)
    counts = np.array([masks[0].sum(), masks[1].sum()], dtype=np.int64)
    sums = kernels.class_distance_sums(d.samples, class_ids)
    own = class_ids
    other = 1 - class_ids
    out = np.zeros(d.m, dtype=np.float64)
    multi = counts[own] > 1
    a = np.zeros(d.m)
    a[multi] = sums[multi, own[multi]] / (counts[own[multi]] - 1)
    b = sums[np.arange(d.m), other] / counts[other]
    denom = np.maximum(a, b)
    live = multi & (a != b)
    out[live] = (b[live] - a[live]) / denom[live]
    return out


@dataclass(frozen=True)
class SilhouetteReport:
    coefficients: np.ndarray
    labels: np.ndarray
    per_class_mean: dict
    bin_thresholds: tuple
    bin_counts: tuple
    bin_fractions: tuple

    def __post_init__(self):
        coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if coefficients.min() < -1.0 - 1e-12 or coefficients.max() > 1.0 + 1e-12:
            raise DataInvariantError("silhouette coefficient outside [-1, 1]")
        if sum(self.bin_counts) != coefficients.shape[0]:
            raise DataInvariantError("bin counts do not sum to the sample count")
        coefficients.flags.writeable = False
        object.__setattr__(self, "coefficients", coefficients)

    @property
    def m(self) -> int:
        return self.coefficients.shape[0]

    def bin_of(self, value: float) -> str:
        lo, hi = self.bin_thresholds
        if value < lo:
            return BIN_NAMES[0]
        if value > hi:
            return BIN_NAMES[2]
        return BIN_NAMES[1]


def silhouette_report(d: Dataset, bin_thresholds=DEFAULT_BIN_THRESHOLDS) -> SilhouetteReport:
    """Coefficients plus per-class means and three-bin occupancy.

    Bins partition [-1, 1] as s < lo, lo <= s <= hi, s > hi.
    """
    lo, hi = float(bin_thresholds[0]), float(bin_thresholds[1])
    if not (-1.0 < lo < hi < 1.0):
        raise DataInvariantError("bin thresholds must satisfy -1 < lo < hi < 1")
    coef = silhouette_values(d)
    per_class = {}
    for value in d.label_values():
        per_class[value] = float(coef[d.labels == value].mean())
    counts = (
        int((coef < lo).sum()),
        int(((coef >= lo) & (coef <= hi)).sum()),
        int((coef > hi).sum()),
    )
    fractions = tuple(c / d.m for c in counts)
    return SilhouetteReport(
        coefficients=coef,
        labels=d.labels,
        per_class_mean=per_class,
        bin_thresholds=(lo, hi),
        bin_counts=counts,
        bin_fractions=fractions,
    )


@dataclass(frozen=True)
class GourmetWeights:
    """Difficulty weights: 1 at the minimum silhouette, 0 at the maximum."""

    weights: np.ndarray
    silhouette_max: float
    silhouette_min: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.min() < 0.0 or w.max() > 1.0:
            raise DataInvariantError("weight outside [0, 1]")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


def gourmet_weights(report: SilhouetteReport) -> GourmetWeights:
    """w_i = (s_max - s_i) / (s_max - s_min); errors when the spread is zero."""
    coef = report.coefficients
    s_max = float(coef.max())
    s_min = float(coef.min())
    if s_max == s_min:
        raise DataInvariantError("degenerate weighting: all silhouette coefficients equal")
    return GourmetWeights((s_max - coef) / (s_max - s_min), s_max, s_min)


def report_to_csv(report: SilhouetteReport, path) -> None:
    """One row per sample: index, label, coefficient, bin."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "label", "coefficient", "bin"])
        for i in range(report.m):
            c = float(report.coefficients[i])
            writer.writerow([i, report.labels[i], repr(c), report.bin_of(c)])


def report_to_json(report: SilhouetteReport, path) -> None:
    """Summary only: thresholds, bin occupancy, per-class means."""
    lo, hi = report.bin_thresholds
    payload = {
        "m": report.m,
        "bin_thresholds": [lo, hi],
        "bins": [
            {
                "name": BIN_NAMES[i],
                "count": report.bin_counts[i],
                "fraction": report.bin_fractions[i],
                "percent": round(100.0 * report.bin_fractions[i], 2),
            }
            for i in range(3)
        ],
        "per_class_mean": {str(k): v for k, v in report.per_class_mean.items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
