"""Silhouette-ordered class shrinking and the imbalance-degree fault tolerance sweep.

A sweep removes growing fractions of one class from a fixed training set,
re-evaluates after each removal, and reports the imbalance degree of the
first iteration whose metrics stop being acceptable (IDft). Removed samples
are not discarded: they join the evaluation set, so the evaluator keeps
seeing them as real data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from silsample.data import (
    DataInvariantError,
    Dataset,
    _largest_remainder,
    class_counts,
    concat_datasets,
    imbalance_degree,
)
from silsample.evaluate import MetricsReport, mean_metrics
from silsample.silhouette import SilhouetteReport, silhouette_report

DESCENDING = "descending-silhouette"
ASCENDING = "ascending-silhouette"
RANDOM = "random"
ORDERS = (DESCENDING, ASCENDING, RANDOM)


class SweepEvaluationError(RuntimeError):
    """The evaluator failed; carries the 1-based sweep iteration."""

    def __init__(self, iteration: int, cause: Exception):
        super().__init__(f"evaluator failed at iteration {iteration}: {cause}")
        self.iteration = iteration


@dataclass(frozen=True)
class RemovalPlan:
    """Which class to shrink, by how much, and in what order.

    order is one of descending-silhouette (best-placed samples leave first),
    ascending-silhouette (boundary samples leave first), or random.
    """

    target_class: str
    fraction: float
    order: str = DESCENDING
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.fraction <= 1.0):
            raise DataInvariantError("removal fraction must lie in [0, 1]")
        if self.order not in ORDERS:
            raise DataInvariantError(f"unknown removal order {self.order!r}")


def _removal_order(plan: RemovalPlan, class_idx: np.ndarray,
                   coefficients: np.ndarray, rng) -> np.ndarray:
    if plan.order == RANDOM:
        return rng.permutation(class_idx)
    keys = coefficients[class_idx]
    if plan.order == DESCENDING:
        keys = -keys
    # silhouette ties resolve to the lower sample index
    return class_idx[np.lexsort((class_idx, keys))]


def remove_fraction(train: Dataset, plan: RemovalPlan,
                    report: SilhouetteReport):
    """Remove floor(fraction * class count) samples of the target class.

    Returns (reduced, removed); reduced is reshuffled with the plan seed,
    removed keeps the removal order. Removing the whole class is an error.
    A fraction of 0 returns the input unchanged with an empty removed set.
    """
    if report.m != train.m:
        raise DataInvariantError("silhouette report does not match the training set")
    class_idx = np.flatnonzero(train.labels == plan.target_class)
    if class_idx.shape[0] == 0:
        raise DataInvariantError(f"target class {plan.target_class!r} not present")
    # epsilon guards the floor against products like 0.15 * 20 = 2.9999...
    r = int(math.floor(plan.fraction * class_idx.shape[0] + 1e-9))
    if r >= class_idx.shape[0]:
        raise DataInvariantError("removal would empty the target class")
    if r == 0:
        removed = train.take(np.empty(0, dtype=np.intp))
        return train, removed
    rng = np.random.default_rng(plan.seed)
    ordered = _removal_order(plan, class_idx, report.coefficients, rng)
    removed_idx = ordered[:r]
    keep = np.setdiff1d(np.arange(train.m), removed_idx)
    rng.shuffle(keep)
    return train.take(keep), train.take(removed_idx)


@dataclass(frozen=True)
class SweepRecord:
    """One sweep iteration: removal fraction, resulting class balance, metrics."""

    iteration: int
    fraction: float
    class_percentages: dict
    id_value: float
    metrics: MetricsReport
    acceptable: bool


@dataclass(frozen=True)
class SweepResult:
    baseline: MetricsReport
    records: tuple
    idft: float | None
    idft_iteration: int | None
    order: str
    target_class: str


def default_acceptability(metrics: MetricsReport, baseline: MetricsReport) -> bool:
    """Acceptable while the F-measure holds at least half its baseline value."""
    return metrics.f_measure >= 0.5 * baseline.f_measure


def _eval_split(d: Dataset, eval_fraction: float, seed: int):
    """Stratified (train, evalset) partition used when no validation set is given."""
    if not (0.0 < eval_fraction < 1.0):
        raise DataInvariantError("eval_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    per_class = [np.flatnonzero(d.labels == v) for v in sorted(set(d.labels))]
    for idx in per_class:
        rng.shuffle(idx)
    n_eval = int(round(d.m * eval_fraction))
    take = _largest_remainder([len(i) for i in per_class], n_eval)
    eval_idx = np.concatenate([i[:t] for i, t in zip(per_class, take)])
    train_idx = np.concatenate([i[t:] for i, t in zip(per_class, take)])
    if eval_idx.shape[0] == 0 or train_idx.shape[0] == 0:
        raise DataInvariantError("empty split part")
    rng.shuffle(eval_idx)
    rng.shuffle(train_idx)
    return d.take(train_idx), d.take(eval_idx)


def idft_sweep(d: Dataset, fractions, evaluator, acceptability=None, *,
               order: str = DESCENDING, target_class=None, seed: int = 0,
               eval_fraction: float = 0.25, validation=None) -> SweepResult:
    """Shrink one class over the given fractions and find where metrics fail.

    evaluator(train, evalset, seed) -> MetricsReport runs once on the intact
    training set (the baseline) and once per fraction. Every fraction removes
    from the original training set, not from the previous iteration. The
    removed rows are appended to the evaluation set. IDft is the imbalance
    degree of the first unacceptable iteration; later iterations are still
    recorded. acceptability defaults to an F-measure floor of half baseline.
    """
    fractions = [float(f) for f in fractions]
    if not fractions:
        raise DataInvariantError("no removal fractions given")
    if any(not (0.0 < f < 1.0) for f in fractions):
        raise DataInvariantError("removal fractions must lie in (0, 1)")
    if any(b <= a for a, b in zip(fractions[:-1], fractions[1:])):
        raise DataInvariantError("removal fractions must be strictly ascending")
    if acceptability is None:
        acceptability = default_acceptability
    if validation is None:
        train, validation = _eval_split(d, eval_fraction, seed)
    else:
        train = d
    cc = class_counts(train)
    target = cc.minority_label if target_class is None else str(target_class)
    report = silhouette_report(train)
    try:
        baseline = evaluator(train, validation, seed)
    except Exception as e:
        raise SweepEvaluationError(0, e) from e
    records = []
    idft = None
    idft_iteration = None
    for iteration, fraction in enumerate(fractions, start=1):
        plan = RemovalPlan(target, fraction, order, seed)
        reduced, removed = remove_fraction(train, plan, report)
        evalset = concat_datasets(validation, removed) if removed.m else validation
        try:
            metrics = evaluator(reduced, evalset, seed)
        except Exception as e:
            raise SweepEvaluationError(iteration, e) from e
        id_value = imbalance_degree(reduced)
        ok = bool(acceptability(metrics, baseline))
        counts = {v: int((reduced.labels == v).sum()) for v in reduced.label_values()}
        pcts = {v: 100.0 * c / reduced.m for v, c in counts.items()}
        records.append(SweepRecord(iteration, fraction, pcts, id_value, metrics, ok))
        if not ok and idft is None:
            idft = id_value
            idft_iteration = iteration
    return SweepResult(baseline, tuple(records), idft, idft_iteration, order, target)


def cross_validated_sweep(d: Dataset, fractions, evaluator, acceptability=None, *,
                          k: int = 5, order: str = DESCENDING, target_class=None,
                          seed: int = 0) -> SweepResult:
    """idft_sweep averaged over k stratified folds.

    Each fold serves once as the fixed evaluation set while the rest sweeps.
    Records are averaged position-wise; acceptability and IDft are judged on
    the averaged metrics. Per-fold results are discarded, only the mean view
    is returned.
    """
    from silsample.evaluate import kfold_indices

    if acceptability is None:
        acceptability = default_acceptability
    folds = kfold_indices(d.labels, k, seed)
    results = []
    for f, eval_idx in enumerate(folds):
        rest = np.concatenate([folds[i] for i in range(k) if i != f])
        train = d.take(rest)
        evalset = d.take(eval_idx)
        if len(set(train.labels)) < 2 or len(set(evalset.labels)) < 2:
            raise DataInvariantError(f"fold {f}: single-class partition")
        results.append(idft_sweep(train, fractions, evaluator,
                                  acceptability=lambda m, b: True,
                                  order=order, target_class=target_class,
                                  seed=seed, validation=evalset))
    baseline = mean_metrics([r.baseline for r in results])
    records = []
    idft = None
    idft_iteration = None
    for pos in range(len(results[0].records)):
        rows = [r.records[pos] for r in results]
        metrics = mean_metrics([row.metrics for row in rows])
        ok = bool(acceptability(metrics, baseline))
        pcts: dict = {}
        for row in rows:
            for label, pct in row.class_percentages.items():
                pcts[label] = pcts.get(label, 0.0) + pct / len(rows)
        id_value = float(np.mean([row.id_value for row in rows]))
        records.append(SweepRecord(rows[0].iteration, rows[0].fraction, pcts,
                                   id_value, metrics, ok))
        if not ok and idft is None:
            idft = id_value
            idft_iteration = rows[0].iteration
    return SweepResult(baseline, tuple(records), idft, idft_iteration, order,
                       results[0].target_class)


def sweep_to_csv(result: SweepResult, path) -> None:
    """One row per iteration: class percentages, ID, metrics, IDft marker."""
    labels = sorted({label for r in result.records for label in r.class_percentages})
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "fraction"]
            + [f"pct_{label}" for label in labels]
            + ["id", "precision", "recall", "f_measure", "accuracy", "auc", "is_idft"])
        for r in result.records:
            m = r.metrics
            writer.writerow(
                [r.iteration, r.fraction]
                + [round(r.class_percentages.get(label, 0.0), 2) for label in labels]
                + [repr(r.id_value), repr(m.precision), repr(m.recall),
                   repr(m.f_measure), repr(m.accuracy),
                   "" if m.auc is None else repr(m.auc),
                   1 if r.iteration == result.idft_iteration else 0])


def sweep_to_json(result: SweepResult, path) -> None:
    payload = {
        "order": result.order,
        "target_class": result.target_class,
        "baseline": result.baseline.as_dict(),
        "idft": result.idft,
        "idft_iteration": result.idft_iteration,
        "records": [
            {
                "iteration": r.iteration,
                "fraction": r.fraction,
                "class_percentages": r.class_percentages,
                "id": r.id_value,
                "acceptable": r.acceptable,
                "metrics": r.metrics.as_dict(),
            }
            for r in result.records
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
