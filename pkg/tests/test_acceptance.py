"""Ten go/no-go checks over the toolkit's headline guarantees.

Each check prints exactly one verdict line (criterion N: PASS or FAIL) so a
full run reads as a checklist. The checks only use public behavior plus the
independent oracles in oracles.py; tolerances are pinned in the asserts.
"""

import time

import numpy as np
import pytest

from silsample.data import (
    Dataset,
    SplitSpec,
    class_counts,
    feature_stats,
    imbalance_degree,
    split,
    weighted_feature_stats,
)
from silsample.evaluate import (
    MlpConfig,
    MlpModel,
    classification_metrics,
    loss_and_gradients,
    mlp_evaluator,
    mlp_init,
    mlp_predict,
    mlp_predict_batch,
    mlp_train,
    pearson_matrix,
    roc_points_and_auc,
)
from silsample.data import DataInvariantError
from silsample.oversample import _interpolate, adasyn_allocation, rebalance, smote
from silsample.silhouette import gourmet_weights, silhouette_report, silhouette_values
from silsample.undersample import DESCENDING, RANDOM, idft_sweep, sweep_to_csv

from helpers import random_two_class, two_cluster
from oracles import (
    adasyn_quota_oracle,
    knn_scan_oracle,
    majority_label_oracle,
    mann_whitney_auc,
    pearson_oracle,
    silhouette_oracle,
)

NINETEEN_FRACTIONS = [round(0.05 * i, 2) for i in range(1, 20)]


class _verdict:
    """Prints one PASS/FAIL line per criterion on the real stdout.

    capsys.disabled() lifts the capture, so the checklist is visible in any
    run without -s.
    """

    def __init__(self, criterion: int, capsys):
        self.criterion = criterion
        self.capsys = capsys

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        with self.capsys.disabled():
            print(f"criterion {self.criterion}: {status}", flush=True)
        return False


def test_criterion_01_silhouette_matches_brute_force(capsys):
    with _verdict(1, capsys):
        start = time.perf_counter()
        rng = np.random.default_rng(41)
        for _ in range(20):
            m = int(rng.integers(20, 201))
            n = int(rng.integers(1, 12))
            d = random_two_class(rng, m, n)
            got = silhouette_values(d)
            want = np.array(silhouette_oracle(d.samples, d.labels))
            assert np.max(np.abs(got - want)) <= 1e-9
        singleton = Dataset(
            np.vstack([rng.normal(size=(9, 3)), [[40.0, 40.0, 40.0]]]),
            ["a"] * 9 + ["b"], ["f0", "f1", "f2"])
        values = silhouette_values(singleton)
        assert values[-1] == 0.0
        assert time.perf_counter() - start < 10.0


def test_criterion_02_smote_segment_geometry(capsys):
    with _verdict(2, capsys):
        rng = np.random.default_rng(42)
        minority = rng.normal(size=(40, 5))
        k = 5
        batch = smote(minority, k=k, g=1000, seed=7)
        assert batch.samples.shape == (1000, 5)
        starts, diffs = [], []
        for i in range(minority.shape[0]):
            order = knn_scan_oracle(minority, minority[i], k + 1)
            for u in [j for j in order if j != i][:k]:
                starts.append(minority[i])
                diffs.append(minority[u] - minority[i])
        starts = np.array(starts)
        diffs = np.array(diffs)
        norms = (diffs ** 2).sum(axis=1)
        assert norms.min() > 0.0
        for s in batch.samples:
            t = ((s - starts) * diffs).sum(axis=1) / norms
            residual = np.linalg.norm(starts + t[:, None] * diffs - s, axis=1)
            hit = (residual <= 1e-9) & (t >= -1e-9) & (t <= 1.0 + 1e-9)
            assert hit.any()
        # interpolation endpoints reproduce the parent rows bit for bit
        x, u = minority[0], minority[1]
        assert _interpolate(x, u, 0.0).tobytes() == x.tobytes()
        assert _interpolate(x, u, 1.0).tobytes() == u.tobytes()
        twins = np.tile(minority[3], (6, 1))
        parents = {row.tobytes() for row in twins}
        for row in smote(twins, k=2, g=50, seed=1).samples:
            assert row.tobytes() in parents


def test_criterion_03_adasyn_allocation_recount(capsys):
    with _verdict(3, capsys):
        rng = np.random.default_rng(43)
        for _ in range(10):
            m = int(rng.integers(30, 81))
            n = int(rng.integers(2, 7))
            d = random_two_class(rng, m, n)
            g = int(rng.integers(20, 61))
            allocation = adasyn_allocation(d, k=5, g=g)
            assert int(allocation.quotas.sum()) == g
            minority_label = class_counts(d).minority_label
            oracle_ratios, oracle_quotas = adasyn_quota_oracle(
                d.samples, d.labels, minority_label, 5, g)
            assert np.max(np.abs(allocation.ratios - oracle_ratios)) <= 1e-12
            assert list(allocation.quotas) == oracle_quotas
            ratios, quotas = allocation.ratios, allocation.quotas
            for i in range(len(ratios)):
                for j in range(len(ratios)):
                    if ratios[i] > ratios[j]:
                        assert quotas[i] >= quotas[j]


def test_criterion_04_gaussian_rejection_contract(capsys):
    with _verdict(4, capsys):
        train = two_cluster(37, 100, n=4, separation=8.0, seed=11)
        assert imbalance_degree(train) == 37 / 100
        minority_label = class_counts(train).minority_label
        for algorithm in ("g1no", "g1no-gourmet"):
            balanced, batch = rebalance(train, algorithm, seed=5)
            assert imbalance_degree(balanced) == 1.0
            for row in batch.samples:
                winner = majority_label_oracle(train.samples, train.labels,
                                               row, 1)
                assert winner == minority_label
            stacked = np.vstack([train.samples, batch.samples])
            assert len({r.tobytes() for r in stacked}) == stacked.shape[0]
            again = rebalance(train, algorithm, seed=5)[1]
            assert np.array_equal(batch.samples, again.samples)
            assert batch.provenance() == again.provenance()


def test_criterion_05_weighted_statistics(capsys):
    with _verdict(5, capsys):
        rng = np.random.default_rng(45)
        samples = rng.normal(size=(50, 6)) * 3.0 + 1.0
        plain = feature_stats(samples)
        uniform = weighted_feature_stats(samples, np.full(50, 0.37))
        assert np.max(np.abs(plain.means - uniform.means)) <= 1e-12
        assert np.max(np.abs(plain.std_devs - uniform.std_devs)) <= 1e-12
        report = silhouette_report(random_two_class(rng, 60, 4))
        weights = gourmet_weights(report).weights
        s = report.coefficients
        assert weights[np.argmax(s)] == 0.0
        assert weights[np.argmin(s)] == 1.0


def test_criterion_06_imbalance_degree_anchor(capsys):
    with _verdict(6, capsys):
        d = two_cluster(2712, 7288, n=2, separation=6.0, seed=0)
        assert abs(imbalance_degree(d) - 0.3721) <= 0.0001


def test_criterion_07_mlp_gradients_and_shape(capsys):
    with _verdict(7, capsys):
        rng = np.random.default_rng(47)
        x = rng.normal(size=(12, 7))
        y = rng.integers(0, 2, size=12).astype(np.float64)
        step = 1e-5
        for activation in ("relu", "sigmoid"):
            model = mlp_init(7, seed=3, hidden_activation=activation)
            _, grads_w, grads_b = loss_and_gradients(model, x, y)
            for layer in range(3):
                for params, grads in ((model.weights, grads_w),
                                      (model.biases, grads_b)):
                    flat = params[layer].ravel()
                    probe = np.linspace(0, flat.size - 1,
                                        num=min(flat.size, 25), dtype=int)
                    for idx in probe:
                        keep = flat[idx]
                        flat[idx] = keep + step
                        up = loss_and_gradients(model, x, y)[0]
                        flat[idx] = keep - step
                        down = loss_and_gradients(model, x, y)[0]
                        flat[idx] = keep
                        numeric = (up - down) / (2.0 * step)
                        analytic = grads[layer].ravel()[idx]
                        denom = max(abs(analytic) + abs(numeric), 1e-8)
                        assert abs(analytic - numeric) / denom < 1e-4
        train = two_cluster(30, 40, n=5, seed=12)
        holdout = two_cluster(8, 8, n=5, seed=13)
        config = MlpConfig(epochs=4, seed=9)
        first, trace_a = mlp_train(train, holdout, config)
        second, trace_b = mlp_train(train, holdout, config)
        for layer in range(3):
            assert np.array_equal(first.weights[layer], second.weights[layer])
            assert np.array_equal(first.biases[layer], second.biases[layer])
        assert trace_a == trace_b
        assert first.layer_sizes == (5, 22, 22, 1)
        with pytest.raises(DataInvariantError):
            MlpModel([np.zeros((5, 10)), np.zeros((10, 10)), np.zeros((10, 1))],
                     [np.zeros(10), np.zeros(10), np.zeros(1)])
        flat_model = MlpModel([np.zeros((5, 22)), np.zeros((22, 22)),
                               np.zeros((22, 1))],
                              [np.zeros(22), np.zeros(22), np.zeros(1)])
        assert mlp_predict(flat_model, np.ones(5)) == 0.5


def test_criterion_08_metric_oracles(capsys):
    with _verdict(8, capsys):
        rng = np.random.default_rng(48)
        for _ in range(20):
            q = int(rng.integers(20, 120))
            probs = np.round(rng.random(q), 1)
            targets = rng.integers(0, 2, size=q)
            targets[0], targets[1] = 0, 1
            _, auc = roc_points_and_auc(probs, targets)
            assert abs(auc - mann_whitney_auc(probs, targets)) <= 1e-9
        perfect_probs = np.concatenate([np.full(30, 0.9), np.full(40, 0.1)])
        perfect_targets = np.concatenate([np.ones(30, dtype=np.int64),
                                          np.zeros(40, dtype=np.int64)])
        assert roc_points_and_auc(perfect_probs, perfect_targets)[1] == 1.0
        d = random_two_class(rng, 60, 5)
        corr = pearson_matrix(d)
        values = corr.values
        assert np.array_equal(values, values.T)
        assert np.all(np.diag(values) == 1.0)
        oracle = np.array(pearson_oracle(d.samples))
        assert np.max(np.abs(values - oracle)) <= 1e-10


def _mixture(seed: int) -> Dataset:
    """11-feature mixture, m = 4000: one clean minority lobe far from the
    majority cloud and a smaller lobe close enough to be hard."""
    n = 11
    rng = np.random.default_rng(seed)
    majority = rng.normal(0.0, 1.0, size=(2850, n))
    far = rng.normal(7.5 / np.sqrt(n), 1.0, size=(900, n))
    near = rng.normal(3.0 / np.sqrt(n), 1.0, size=(250, n))
    samples = np.vstack([majority, far, near])
    labels = ["neg"] * 2850 + ["pos"] * 1150
    perm = rng.permutation(len(labels))
    return Dataset(samples[perm], [labels[i] for i in perm],
                   [f"f{j}" for j in range(n)])


def _cliff_fraction(result) -> float:
    # no failure inside the grid counts as a cliff past the last fraction
    if result.idft_iteration is None:
        return 1.0
    return result.records[result.idft_iteration - 1].fraction


def _mean_abs_offdiag(corr) -> float:
    v = corr.values
    mask = ~np.eye(v.shape[0], dtype=bool)
    return float(np.abs(v[mask]).mean())


def test_criterion_09_qualitative_reproduction(capsys):
    with _verdict(9, capsys):
        start = time.perf_counter()

        # (a) stripping the best-placed minority samples first breaks the
        # F-measure at a smaller removal fraction than random removal
        desc_cliffs, random_cliffs = [], []
        for seed in (0, 1, 2):
            d = _mixture(seed)
            evaluator = mlp_evaluator(MlpConfig(seed=seed))
            desc = idft_sweep(d, NINETEEN_FRACTIONS, evaluator,
                              order=DESCENDING, seed=seed)
            rand = idft_sweep(d, NINETEEN_FRACTIONS, evaluator,
                              order=RANDOM, seed=seed)
            desc_cliffs.append(_cliff_fraction(desc))
            random_cliffs.append(_cliff_fraction(rand))
        assert np.mean(desc_cliffs) < np.mean(random_cliffs)

        # (b) every rebalancing algorithm supports accurate training, and the
        # Gaussian family flattens feature correlation at least as hard as the
        # interpolating baseline (averages over 5 seeds)
        algorithms = ("smote", "adasyn", "g1no", "g1no-gourmet")
        accuracy = {a: [] for a in algorithms}
        offdiag = {a: [] for a in algorithms}
        for seed in range(5):
            d = _mixture(seed + 100)
            train, validation, test = split(d, SplitSpec(
                train_fraction=0.85, test_fraction=0.15,
                validation_fraction=0.15, seed=seed))
            positive = class_counts(train).minority_label
            for algorithm in algorithms:
                balanced, _ = rebalance(train, algorithm, seed)
                config = MlpConfig(seed=seed)
                model, _ = mlp_train(balanced, validation, config,
                                     positive_label=positive)
                probs = mlp_predict_batch(model, test.samples)
                targets = (test.labels == positive).astype(np.int64)
                report = classification_metrics(probs, targets,
                                                config.threshold,
                                                positive_label=positive)
                accuracy[algorithm].append(report.accuracy)
                offdiag[algorithm].append(
                    _mean_abs_offdiag(pearson_matrix(balanced)))
        for algorithm in algorithms:
            assert np.mean(accuracy[algorithm]) >= 0.95, algorithm
        smote_r = np.mean(offdiag["smote"])
        assert np.mean(offdiag["g1no"]) <= smote_r
        assert np.mean(offdiag["g1no-gourmet"]) <= smote_r

        assert time.perf_counter() - start < 300.0


def test_criterion_10_sweep_harness_structure(tmp_path, capsys):
    with _verdict(10, capsys):
        from silsample.evaluate import MetricsReport

        def share_evaluator(train, evalset, seed):
            f = imbalance_degree(train)
            return MetricsReport(tp=1, fp=0, tn=1, fn=0, precision=f,
                                 recall=f, f_measure=f, accuracy=f)

        holdout = two_cluster(10, 10, seed=50)
        train = two_cluster(100, 150, seed=51)
        result = idft_sweep(train, NINETEEN_FRACTIONS, share_evaluator,
                            validation=holdout)
        assert len(result.records) == 19
        ids = [r.id_value for r in result.records]
        assert all(b < a for a, b in zip(ids[:-1], ids[1:]))
        assert result.idft_iteration is not None
        path = tmp_path / "sweep.csv"
        sweep_to_csv(result, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 20
        header = lines[0].split(",")
        marker = header.index("is_idft")
        marks = [int(line.split(",")[marker]) for line in lines[1:]]
        assert sum(marks) == 1
        assert marks.index(1) + 1 == result.idft_iteration
