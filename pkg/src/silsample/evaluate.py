"""From-scratch MLP classifier plus the metrics used to judge resampling.

The network is fixed at two hidden layers of 22 units and one sigmoid output,
trained with plain mini-batch gradient descent on binary cross-entropy. The
positive class for every metric is the minority label of the training set.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace

import numpy as np

from silsample.data import DataInvariantError, Dataset, class_counts

HIDDEN_UNITS = 22
PROB_CLIP = 1e-12


class TrainingDivergedError(RuntimeError):
    """A loss became non-finite; carries the 1-based epoch index."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}: non-finite loss")
        self.epoch = epoch


@dataclass(frozen=True)
class MlpConfig:
    epochs: int = 10
    batch_size: int = 10
    learning_rate: float = 0.01
    seed: int = 0
    hidden_activation: str = "relu"
    threshold: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise DataInvariantError("no training performed: epochs must be >= 1")
        if self.batch_size < 1:
            raise DataInvariantError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise DataInvariantError("learning_rate must be non-negative")
        if self.hidden_activation not in ("relu", "sigmoid"):
            raise DataInvariantError(f"unknown hidden activation {self.hidden_activation!r}")
        if not (0.0 < self.threshold < 1.0):
            raise DataInvariantError("threshold must lie in (0, 1)")


@dataclass
class MlpModel:
    """Weights and biases of the n -> 22 -> 22 -> 1 network."""

    weights: list
    biases: list
    hidden_activation: str = "relu"

    def __post_init__(self):
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise DataInvariantError("model must have exactly three weight layers")
        for w, b in zip(self.weights, self.biases):
            if w.shape[1] != b.shape[0]:
                raise DataInvariantError("weight/bias shape mismatch")
        if self.weights[0].shape[1] != HIDDEN_UNITS or self.weights[2].shape[1] != 1:
            raise DataInvariantError("layer sizes must be (n, 22, 22, 1)")

    @property
    def layer_sizes(self) -> tuple:
        return (self.weights[0].shape[0], HIDDEN_UNITS, HIDDEN_UNITS, 1)


@dataclass(frozen=True)
class TrainingTrace:
    """Per-epoch losses, both measured at epoch end over the full sets."""

    train_loss: tuple
    validation_loss: tuple


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def mlp_init(n_features: int, seed: int, hidden_activation: str = "relu") -> MlpModel:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = (n_features, HIDDEN_UNITS, HIDDEN_UNITS, 1)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, hidden_activation)


def _forward(model: MlpModel, x: np.ndarray):
    """Returns (layer activations including input, output probabilities)."""
    acts = [x]
    h = x
    for layer in range(2):
        z = h @ model.weights[layer] + model.biases[layer]
        h = np.maximum(z, 0.0) if model.hidden_activation == "relu" else _sigmoid(z)
        acts.append(h)
    z = h @ model.weights[2] + model.biases[2]
    p = _sigmoid(z)
    acts.append(p)
    return acts, p[:, 0]


def mlp_predict_batch(model: MlpModel, samples) -> np.ndarray:
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights[0].shape[0]:
        raise DataInvariantError("sample dimensionality does not match the model")
    return _forward(model, x)[1]


def mlp_predict(model: MlpModel, sample) -> float:
    """Probability of the positive class for one sample."""
    x = np.asarray(sample, dtype=np.float64).ravel()
    return float(mlp_predict_batch(model, x[None, :])[0])


def bce_loss(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean binary cross-entropy; probabilities clipped away from {0, 1}."""
    p = np.clip(probs, PROB_CLIP, 1.0 - PROB_CLIP)
    t = np.asarray(targets, dtype=np.float64)
    return float(-(t * np.log(p) + (1.0 - t) * np.log(1.0 - p)).mean())


def loss_and_gradients(model: MlpModel, x: np.ndarray, targets: np.ndarray):
    """Mean BCE over the batch and its gradients w.r.t. every weight and bias."""
    acts, probs = _forward(model, x)
    t = np.asarray(targets, dtype=np.float64)
    loss = bce_loss(probs, t)
    batch = x.shape[0]
    # sigmoid + BCE collapses to (p - t) at the output pre-activation
    delta = (acts[3] - t[:, None]) / batch
    grads_w = [None, None, None]
    grads_b = [None, None, None]
    for layer in (2, 1, 0):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        upstream = delta @ model.weights[layer].T
        h = acts[layer]
        if model.hidden_activation == "relu":
            delta = upstream * (h > 0)
        else:
            delta = upstream * h * (1.0 - h)
    return loss, grads_w, grads_b


def _targets(d: Dataset, positive_label) -> np.ndarray:
    return (d.labels == positive_label).astype(np.float64)


def mlp_train(train: Dataset, validation: Dataset, config: MlpConfig,
              positive_label=None):
    """Mini-batch gradient descent; returns (model, per-epoch trace).

    Both loss curves are measured at the end of each epoch over the complete
    training and validation sets, so training on its own validation set gives
    identical curves. The positive class defaults to the training minority.
    """
    if train.n != validation.n:
        raise DataInvariantError("train and validation dimensionality differ")
    if train.m < 1 or validation.m < 1:
        raise DataInvariantError("empty training or validation set")
    if positive_label is None:
        positive_label = class_counts(train).minority_label
    y_train = _targets(train, positive_label)
    y_val = _targets(validation, positive_label)
    rng = np.random.default_rng(config.seed)
    model = mlp_init(train.n, int(rng.integers(2 ** 63)), config.hidden_activation)
    tlc, vlc = [], []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(train.m)
        for start in range(0, train.m, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, gw, gb = loss_and_gradients(model, train.samples[idx], y_train[idx])
            for layer in range(3):
                model.weights[layer] -= config.learning_rate * gw[layer]
                model.biases[layer] -= config.learning_rate * gb[layer]
        t_loss = bce_loss(mlp_predict_batch(model, train.samples), y_train)
        v_loss = bce_loss(mlp_predict_batch(model, validation.samples), y_val)
        if not (np.isfinite(t_loss) and np.isfinite(v_loss)):
            raise TrainingDivergedError(epoch)
        tlc.append(t_loss)
        vlc.append(v_loss)
    return model, TrainingTrace(tuple(tlc), tuple(vlc))


@dataclass(frozen=True)
class MetricsReport:
    """Confusion counts and the derived scores, all in [0, 1].

    auc and roc_points stay empty when the evaluated labels contain a single
    class. Zero-denominator conventions: precision, recall and F-measure fall
    back to 0.
    """

    tp: int
    fp: int
    tn: int
    fn: int
    precision: float
    recall: float
    f_measure: float
    accuracy: float
    auc: float | None = None
    roc_points: tuple = ()
    positive_label: str | None = None

    def as_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "precision": self.precision, "recall": self.recall,
            "f_measure": self.f_measure, "accuracy": self.accuracy,
            "auc": self.auc, "positive_label": self.positive_label,
        }


def roc_points_and_auc(probs, targets):
    """ROC curve over descending score thresholds with tied scores grouped,
    plus the trapezoidal area under it.

    Equals the Mann-Whitney statistic with ties counted 1/2. Errors when the
    targets are single-class.
    """
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1:
        raise DataInvariantError("probabilities and targets must be equal-length vectors")
    pos = int(t.sum())
    neg = t.shape[0] - pos
    if pos == 0 or neg == 0:
        raise DataInvariantError("ROC undefined for single-class targets")
    order = np.argsort(-p, kind="stable")
    scores = p[order]
    hits = t[order]
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < scores.shape[0]:
        j = i
        while j < scores.shape[0] and scores[j] == scores[i]:
            j += 1
        tp += int(hits[i:j].sum())
        fp += (j - i) - int(hits[i:j].sum())
        points.append((fp / neg, tp / pos))
        i = j
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points[:-1], points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return tuple(points), float(auc)


def classification_metrics(probs, targets, threshold: float = 0.5,
                           positive_label=None) -> MetricsReport:
    """Threshold the probabilities (positive iff p >= threshold) and score.

    targets are 0/1 with 1 marking the positive (minority) class.
    """
    p = np.asarray(probs, dtype=np.float64)
    t = np.asarray(targets, dtype=np.int64)
    if p.shape != t.shape or p.ndim != 1 or p.shape[0] < 1:
        raise DataInvariantError("probabilities and targets must be equal-length vectors")
    pred = p >= threshold
    actual = t == 1
    tp = int((pred & actual).sum())
    fp = int((pred & ~actual).sum())
    fn = int((~pred & actual).sum())
    tn = int((~pred & ~actual).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f_measure = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = (tp + tn) / t.shape[0]
    auc = None
    roc = ()
    if 0 < actual.sum() < t.shape[0]:
        roc, auc = roc_points_and_auc(p, t)
    return MetricsReport(tp, fp, tn, fn, precision, recall, f_measure, accuracy,
                         auc, roc, positive_label)


def evaluate_split(train: Dataset, evalset: Dataset, config: MlpConfig):
    """Train on train, score on evalset; positive class is the train minority.

    Returns (model, trace, MetricsReport).
    """
    positive = class_counts(train).minority_label
    model, trace = mlp_train(train, evalset, config, positive_label=positive)
    probs = mlp_predict_batch(model, evalset.samples)
    report = classification_metrics(probs, _targets(evalset, positive).astype(np.int64),
                                    config.threshold, positive_label=positive)
    return model, trace, report


def mlp_evaluator(config: MlpConfig):
    """Evaluator callback (train, evalset, seed) -> MetricsReport for sweeps."""

    def run(train: Dataset, evalset: Dataset, seed: int) -> MetricsReport:
        cfg = replace(config, seed=seed)
        return evaluate_split(train, evalset, cfg)[2]

    return run


def mean_metrics(reports) -> MetricsReport:
    """Field-wise mean of several reports; counts become rounded means and the
    ROC polyline is dropped. AUC averages over the reports that have one."""
    reports = list(reports)
    if not reports:
        raise DataInvariantError("no reports to average")
    aucs = [r.auc for r in reports if r.auc is not None]
    labels = {r.positive_label for r in reports}
    return MetricsReport(
        tp=round(float(np.mean([r.tp for r in reports]))),
        fp=round(float(np.mean([r.fp for r in reports]))),
        tn=round(float(np.mean([r.tn for r in reports]))),
        fn=round(float(np.mean([r.fn for r in reports]))),
        precision=float(np.mean([r.precision for r in reports])),
        recall=float(np.mean([r.recall for r in reports])),
        f_measure=float(np.mean([r.f_measure for r in reports])),
        accuracy=float(np.mean([r.accuracy for r in reports])),
        auc=float(np.mean(aucs)) if aucs else None,
        roc_points=(),
        positive_label=labels.pop() if len(labels) == 1 else None,
    )


@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    feature_names: tuple
    zero_variance: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DataInvariantError("correlation matrix must be square")
        if not np.allclose(v, v.T, atol=1e-12):
            raise DataInvariantError("correlation matrix must be symmetric")
        if (np.abs(v) > 1.0 + 1e-12).any():
            raise DataInvariantError("correlation outside [-1, 1]")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def pearson_matrix(d: Dataset) -> CorrelationMatrix:
    """Pairwise Pearson correlation of the features.

    Zero-variance features are flagged; their off-diagonal entries are set to
    0 and the diagonal stays 1.
    """
    if d.m < 2:
        raise DataInvariantError("need at least 2 rows for correlations")
    sd = d.samples.std(axis=0, ddof=0)
    flat = np.flatnonzero(sd == 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.corrcoef(d.samples, rowvar=False)
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    c = (c + c.T) / 2.0  # corrcoef is symmetric only to rounding
    for j in flat:
        c[j, :] = 0.0
        c[:, j] = 0.0
    np.fill_diagonal(c, 1.0)
    c = np.clip(c, -1.0, 1.0)
    return CorrelationMatrix(c, d.feature_names, tuple(int(j) for j in flat))


def kfold_indices(labels, k: int, seed: int):
    """Stratified fold index arrays; per-class counts differ by at most one."""
    labels = np.asarray(labels, dtype=object)
    if k < 2:
        raise DataInvariantError("k must be >= 2")
    rng = np.random.default_rng(seed)
    chunks = []
    for value in sorted(set(labels)):
        idx = np.flatnonzero(labels == value)
        rng.shuffle(idx)
        chunks.append(idx)
    order = np.concatenate(chunks)
    pos = np.arange(order.shape[0])
    return [order[pos % k == f] for f in range(k)]


@dataclass(frozen=True)
class KFoldResult:
    mean: MetricsReport
    folds: tuple


def kfold_cv(d: Dataset, k: int, runner, seed: int = 0) -> KFoldResult:
    """k-fold cross-validation; runner(train, test, seed) -> MetricsReport.

    Every fold must keep both classes on each side, otherwise the fold is
    rejected as single-class.
    """
    folds = kfold_indices(d.labels, k, seed)
    reports = []
    for f, test_idx in enumerate(folds):
        train_idx = np.concatenate([folds[i] for i in range(k) if i != f])
        train = d.take(train_idx)
        test = d.take(test_idx)
        if len(set(train.labels)) < 2 or len(set(test.labels)) < 2:
            raise DataInvariantError(f"fold {f}: single-class partition")
        reports.append(runner(train, test, seed))
    return KFoldResult(mean_metrics(reports), tuple(reports))


def trace_to_csv(trace: TrainingTrace, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "validation_loss"])
        for i, (t, v) in enumerate(zip(trace.train_loss, trace.validation_loss), start=1):
            writer.writerow([i, repr(t), repr(v)])


def metrics_to_json(report: MetricsReport, path) -> None:
    payload = report.as_dict()
    payload["roc_points"] = [[x, y] for x, y in report.roc_points]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def metrics_to_csv(report: MetricsReport, path) -> None:
    d = report.as_dict()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(d.keys()))
        writer.writerow([("" if v is None else v) for v in d.values()])


def correlation_to_csv(corr: CorrelationMatrix, path) -> None:
    """Square matrix with a leading feature-name column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature"] + list(corr.feature_names))
        for name, row in zip(corr.feature_names, corr.values):
            writer.writerow([name] + [repr(float(v)) for v in row])


def correlation_to_json(corr: CorrelationMatrix, path) -> None:
    payload = {
        "feature_names": list(corr.feature_names),
        "values": [[float(v) for v in row] for row in corr.values],
        "zero_variance": list(corr.zero_variance),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def pairplot_to_csv(d: Dataset, path) -> None:
    """Long-form scatter data for every unordered feature pair (diagonal kept)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature_x", "feature_y", "value_x", "value_y", "class"])
        for i in range(d.n):
            for j in range(i, d.n):
                for r in range(d.m):
                    writer.writerow([
                        d.feature_names[i], d.feature_names[j],
                        repr(float(d.samples[r, i])), repr(float(d.samples[r, j])),
                        d.labels[r],
                    ])
