"""Command-line front end: synth, silhouette, imbalance-sweep, rebalance,
evaluate, and the end-to-end pipeline.

Configuration comes from an optional JSON file plus command-line overrides;
unknown config keys are rejected. Exit codes: 0 success, 1 usage or config
error, 2 violated data invariant, 3 generation budget exhausted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from silsample import __version__
from silsample.data import (
    ClassSpec,
    ClusterSpec,
    DataInvariantError,
    Dataset,
    SplitSpec,
    class_counts,
    imbalance_degree,
    load_csv,
    make_synthetic_dataset,
    min_max_scale,
    save_csv,
    split,
)
from silsample.evaluate import (
    MlpConfig,
    classification_metrics,
    correlation_to_csv,
    correlation_to_json,
    metrics_to_csv,
    metrics_to_json,
    mlp_evaluator,
    mlp_predict_batch,
    mlp_train,
    pairplot_to_csv,
    pearson_matrix,
    trace_to_csv,
)
from silsample.oversample import (
    ALGORITHMS,
    GenerationBudgetError,
    batch_provenance_to_json,
    batch_to_csv,
    rebalance,
)
from silsample.silhouette import report_to_csv, report_to_json, silhouette_report
from silsample.undersample import (
    ASCENDING,
    DESCENDING,
    RANDOM,
    RemovalPlan,
    SweepEvaluationError,
    cross_validated_sweep,
    idft_sweep,
    remove_fraction,
    sweep_to_csv,
    sweep_to_json,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_BUDGET = 3

ORDER_TOKENS = {"asc": ASCENDING, "desc": DESCENDING, "random": RANDOM}


class ConfigError(Exception):
    """Bad usage or configuration; maps to exit code 1."""


DEFAULT_FRACTIONS = [round(0.05 * i, 2) for i in range(1, 20)]

DEFAULTS = {
    "input": None,
    "label_column": None,
    "synth": None,
    "seed": 0,
    "out": "out",
    "scale": False,
    "split": True,
    "test_fraction": 0.15,
    "validation_fraction": 0.15,
    "algorithm": "g1no",
    "k": 5,
    "max_attempts_factor": 1000,
    "bins": [-1.0 / 3.0, 1.0 / 3.0],
    "order": "desc",
    "fractions": DEFAULT_FRACTIONS,
    "folds": 1,
    "eval_fraction": 0.25,
    "epochs": 10,
    "batch_size": 10,
    "learning_rate": 0.01,
    "hidden_activation": "relu",
    "threshold": 0.5,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route that through ConfigError
    # instead so usage problems land on exit code 1.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="silsample",
                     description="silhouette-guided imbalancing and rebalancing toolkit")
    parser.add_argument("--version", action="version", version=f"silsample {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--input", help="input dataset CSV")
        p.add_argument("--label-column", dest="label_column",
                       help="label column name (default: last column)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--scale", action="store_true", default=None,
                       help="min-max scale features to [0, 1]")

    p = sub.add_parser("synth", parents=[], help="generate a two-class Gaussian dataset")
    p.add_argument("--out", help="output CSV path", default="synthetic.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--minority-count", type=int, default=500)
    p.add_argument("--majority-count", type=int, default=1500)
    p.add_argument("--n-features", type=int, default=11)
    p.add_argument("--separation", type=float, default=6.0,
                   help="distance between the class means")
    p.add_argument("--labels", default="pos,neg",
                   help="minority,majority label names")

    p = sub.add_parser("silhouette", help="per-sample silhouette coefficients and bins")
    common(p)
    p.add_argument("--bins", help="bin thresholds lo,hi")

    p = sub.add_parser("imbalance-sweep", help="remove growing class fractions, find IDft")
    common(p)
    p.add_argument("--order", help="removal order: asc, desc, random, or a comma list")
    p.add_argument("--fractions", help="comma list of removal fractions")
    p.add_argument("--folds", type=int, help="cross-validation folds (1 = plain split)")

    p = sub.add_parser("rebalance", help="oversample the minority back to balance")
    common(p)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--k", type=int, help="neighbor count for smote/adasyn")
    p.add_argument("--no-split", action="store_true",
                   help="rebalance the whole input instead of the training part")

    p = sub.add_parser("evaluate", help="train the MLP and report metrics")
    common(p)
    p.add_argument("--pairplot", action="store_true",
                   help="also write the long-form pair plot CSV")

    p = sub.add_parser("pipeline", help="sweep, rebalance and evaluate in one run")
    common(p)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--order", help="removal order: asc, desc or random")
    p.add_argument("--fractions", help="comma list of removal fractions")
    p.add_argument("--k", type=int, help="neighbor count for smote/adasyn")

    return parser


def _parse_float_list(text: str, what: str) -> list:
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip() != ""]
    except ValueError:
        raise ConfigError(f"cannot parse {what}: {text!r}") from None


def build_config(args) -> dict:
    """Defaults, then the JSON config file, then command-line overrides."""
    cfg = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"missing config file: {path}")
        with open(path) as fh:
            try:
                loaded = json.load(fh)
            except json.JSONDecodeError as e:
                raise ConfigError(f"config is not valid JSON: {e}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        for key in loaded:
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
        cfg.update(loaded)
    for key in ("input", "label_column", "out", "seed", "scale", "algorithm",
                "k", "folds"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "order", None) is not None:
        cfg["order"] = args.order
    if getattr(args, "fractions", None) is not None:
        cfg["fractions"] = _parse_float_list(args.fractions, "fractions")
    if getattr(args, "bins", None) is not None:
        cfg["bins"] = _parse_float_list(args.bins, "bins")
    if getattr(args, "no_split", False):
        cfg["split"] = False
    _validate_config(cfg)
    return cfg


def _validate_config(cfg: dict) -> None:
    if cfg["algorithm"] not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {cfg['algorithm']!r}")
    orders = str(cfg["order"]).split(",")
    for token in orders:
        if token not in ORDER_TOKENS:
            raise ConfigError(f"unknown order {token!r} (expected asc, desc or random)")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if cfg["epochs"] < 1:
        raise ConfigError("no training performed: epochs must be >= 1")
    if cfg["batch_size"] < 1:
        raise ConfigError("batch_size must be >= 1")
    if cfg["learning_rate"] < 0:
        raise ConfigError("learning_rate must be non-negative")
    if cfg["hidden_activation"] not in ("relu", "sigmoid"):
        raise ConfigError(f"unknown hidden activation {cfg['hidden_activation']!r}")
    if not (0.0 < cfg["threshold"] < 1.0):
        raise ConfigError("threshold must lie in (0, 1)")
    if cfg["k"] < 1:
        raise ConfigError("k must be >= 1")
    if cfg["folds"] < 1:
        raise ConfigError("folds must be >= 1")
    if cfg["max_attempts_factor"] < 1:
        raise ConfigError("max_attempts_factor must be >= 1")
    if len(cfg["bins"]) != 2 or not (-1.0 < cfg["bins"][0] < cfg["bins"][1] < 1.0):
        raise ConfigError("bins must be two thresholds with -1 < lo < hi < 1")
    fr = cfg["fractions"]
    if not fr or any(not (0.0 < f < 1.0) for f in fr) or \
            any(b <= a for a, b in zip(fr[:-1], fr[1:])):
        raise ConfigError("fractions must be strictly ascending values in (0, 1)")
    for key in ("test_fraction", "validation_fraction", "eval_fraction"):
        if not (0.0 < cfg[key] < 1.0):
            raise ConfigError(f"{key} must lie in (0, 1)")


def _synth_from_spec(spec: dict, seed: int) -> Dataset:
    known = {"minority_count", "majority_count", "n_features", "separation",
             "labels", "seed"}
    for key in spec:
        if key not in known:
            raise ConfigError(f"unknown synth key {key!r}")
    n = int(spec.get("n_features", 11))
    minority_count = int(spec.get("minority_count", 500))
    majority_count = int(spec.get("majority_count", 1500))
    separation = float(spec.get("separation", 6.0))
    labels = spec.get("labels", ["pos", "neg"])
    if len(labels) != 2:
        raise ConfigError("synth labels must name exactly two classes")
    offset = separation / np.sqrt(n)
    classes = (
        ClassSpec(str(labels[1]), (ClusterSpec((0.0,) * n, (1.0,) * n, majority_count),)),
        ClassSpec(str(labels[0]), (ClusterSpec((offset,) * n, (1.0,) * n, minority_count),)),
    )
    return make_synthetic_dataset(classes, int(spec.get("seed", seed)))


def _load_dataset(cfg: dict) -> Dataset:
    if cfg["input"]:
        d = load_csv(cfg["input"], cfg["label_column"])
    elif cfg["synth"]:
        d = _synth_from_spec(cfg["synth"], cfg["seed"])
    else:
        raise ConfigError("no input dataset: pass --input or a synth config block")
    if cfg["scale"]:
        d = min_max_scale(d)
    return d


def _outdir(cfg: dict) -> str:
    os.makedirs(cfg["out"], exist_ok=True)
    return cfg["out"]


def _mlp_config(cfg: dict) -> MlpConfig:
    return MlpConfig(epochs=cfg["epochs"], batch_size=cfg["batch_size"],
                     learning_rate=cfg["learning_rate"], seed=cfg["seed"],
                     hidden_activation=cfg["hidden_activation"],
                     threshold=cfg["threshold"])


def _split_spec(cfg: dict) -> SplitSpec:
    return SplitSpec(train_fraction=1.0 - cfg["test_fraction"],
                     test_fraction=cfg["test_fraction"],
                     validation_fraction=cfg["validation_fraction"],
                     seed=cfg["seed"])


def cmd_synth(cfg: dict, args) -> int:
    labels = [tok.strip() for tok in args.labels.split(",")]
    spec = {
        "minority_count": args.minority_count,
        "majority_count": args.majority_count,
        "n_features": args.n_features,
        "separation": args.separation,
        "labels": labels,
        "seed": args.seed,
    }
    d = _synth_from_spec(spec, args.seed)
    parent = os.path.dirname(os.path.abspath(args.out))
    os.makedirs(parent, exist_ok=True)
    save_csv(d, args.out)
    print(f"wrote {args.out}: {d.m} samples, {d.n} features, "
          f"ID={imbalance_degree(d):.4f}")
    return EXIT_OK


def cmd_silhouette(cfg: dict, args) -> int:
    d = _load_dataset(cfg)
    report = silhouette_report(d, tuple(cfg["bins"]))
    out = _outdir(cfg)
    csv_path = os.path.join(out, f"silhouette-{cfg['seed']}.csv")
    json_path = os.path.join(out, f"silhouette-{cfg['seed']}.json")
    report_to_csv(report, csv_path)
    report_to_json(report, json_path)
    pct = [f"{100.0 * f:.2f}%" for f in report.bin_fractions]
    print(f"bins (near -1 / near 0 / near +1): {pct[0]} / {pct[1]} / {pct[2]}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _run_sweep(d: Dataset, cfg: dict, order: str):
    evaluator = mlp_evaluator(_mlp_config(cfg))
    if cfg["folds"] > 1:
        return cross_validated_sweep(d, cfg["fractions"], evaluator,
                                     k=cfg["folds"], order=order, seed=cfg["seed"])
    return idft_sweep(d, cfg["fractions"], evaluator, order=order,
                      seed=cfg["seed"], eval_fraction=cfg["eval_fraction"])


def cmd_imbalance_sweep(cfg: dict, args) -> int:
    d = _load_dataset(cfg)
    out = _outdir(cfg)
    for token in str(cfg["order"]).split(","):
        result = _run_sweep(d, cfg, ORDER_TOKENS[token])
        csv_path = os.path.join(out, f"imbalance-sweep-{token}-{cfg['seed']}.csv")
        json_path = os.path.join(out, f"imbalance-sweep-{token}-{cfg['seed']}.json")
        sweep_to_csv(result, csv_path)
        sweep_to_json(result, json_path)
        if result.idft is None:
            print(f"order {token}: no iteration failed the acceptability check")
        else:
            print(f"order {token}: IDft={result.idft:.4f} "
                  f"at iteration {result.idft_iteration}")
        print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_rebalance(cfg: dict, args) -> int:
    d = _load_dataset(cfg)
    out = _outdir(cfg)
    algorithm = cfg["algorithm"]
    stem = os.path.join(out, f"rebalance-{algorithm}-{cfg['seed']}")
    if cfg["split"]:
        train, validation, test = split(d, _split_spec(cfg))
        save_csv(validation, stem + "-validation.csv")
        save_csv(test, stem + "-test.csv")
    else:
        train = d
    try:
        balanced, batch = rebalance(train, algorithm, cfg["seed"], k=cfg["k"],
                                    max_attempts_factor=cfg["max_attempts_factor"])
    except GenerationBudgetError as e:
        # keep the counters on disk, withhold the (incomplete) dataset
        batch_provenance_to_json(e.batch, stem + "-provenance.json")
        print(f"error: {e}", file=sys.stderr)
        print(f"wrote {stem}-provenance.json", file=sys.stderr)
        return EXIT_BUDGET
    save_csv(balanced, stem + ".csv")
    batch_to_csv(batch, train.feature_names, stem + "-batch.csv")
    batch_provenance_to_json(batch, stem + "-provenance.json")
    print(f"{algorithm}: accepted {batch.accepted_count} synthetic rows in "
          f"{batch.attempts} attempts, ID={imbalance_degree(balanced):.4f}")
    print(f"wrote {stem}.csv")
    return EXIT_OK


def cmd_evaluate(cfg: dict, args) -> int:
    d = _load_dataset(cfg)
    out = _outdir(cfg)
    train, validation, test = split(d, _split_spec(cfg))
    mlp_cfg = _mlp_config(cfg)
    positive = class_counts(train).minority_label
    model, trace = mlp_train(train, validation, mlp_cfg, positive_label=positive)
    stem = os.path.join(out, f"evaluate-{cfg['seed']}")
    trace_to_csv(trace, stem + "-trace.csv")
    for name, part in (("validation", validation), ("test", test)):
        probs = mlp_predict_batch(model, part.samples)
        targets = (part.labels == positive).astype(np.int64)
        report = classification_metrics(probs, targets, mlp_cfg.threshold,
                                        positive_label=positive)
        metrics_to_json(report, f"{stem}-metrics-{name}.json")
        metrics_to_csv(report, f"{stem}-metrics-{name}.csv")
        auc = "n/a" if report.auc is None else f"{report.auc:.4f}"
        print(f"{name}: precision={report.precision:.4f} recall={report.recall:.4f} "
              f"f={report.f_measure:.4f} acc={report.accuracy:.4f} auc={auc}")
    corr = pearson_matrix(d)
    correlation_to_csv(corr, stem + "-correlation.csv")
    correlation_to_json(corr, stem + "-correlation.json")
    if getattr(args, "pairplot", False):
        pairplot_to_csv(d, stem + "-pairplot.csv")
    print(f"wrote {stem}-* in {out}")
    return EXIT_OK


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


def cmd_pipeline(cfg: dict, args) -> int:
    out = _outdir(cfg)
    run_dir = os.path.join(out, time.strftime("run-%Y%m%d-%H%M%S"))
    suffix = 0
    while os.path.exists(run_dir + (f"-{suffix}" if suffix else "")):
        suffix += 1
    if suffix:
        run_dir = f"{run_dir}-{suffix}"
    os.makedirs(run_dir)
    manifest = {
        "version": __version__,
        "command": "pipeline",
        "config": {k: cfg[k] for k in sorted(cfg)},
        "stages": [],
        "checksums": {},
    }
    order = ORDER_TOKENS[str(cfg["order"]).split(",")[0]]
    algorithm = cfg["algorithm"]
    seed = cfg["seed"]
    exit_code = EXIT_OK
    error: Exception | None = None

    def record(name: str, status: str, detail=None):
        entry = {"name": name, "status": status}
        if detail:
            entry.update(detail)
        manifest["stages"].append(entry)

    stage = "sweep"
    try:
        d = _load_dataset(cfg)
        train, validation, test = split(d, _split_spec(cfg))
        evaluator = mlp_evaluator(_mlp_config(cfg))
        result = idft_sweep(train, cfg["fractions"], evaluator, order=order,
                            seed=seed, validation=validation)
        sweep_to_csv(result, os.path.join(run_dir, f"sweep-{seed}.csv"))
        sweep_to_json(result, os.path.join(run_dir, f"sweep-{seed}.json"))
        pick = result.idft_iteration or len(result.records)
        fraction = result.records[pick - 1].fraction
        plan = RemovalPlan(result.target_class, fraction, order, seed)
        imbalanced, _ = remove_fraction(train, plan, silhouette_report(train))
        save_csv(imbalanced, os.path.join(run_dir, "imbalanced-train.csv"))
        record(stage, "complete", {
            "idft": result.idft, "picked_iteration": pick, "fraction": fraction,
            "id": imbalance_degree(imbalanced)})

        stage = "rebalance"
        balanced, batch = rebalance(imbalanced, algorithm, seed, k=cfg["k"],
                                    max_attempts_factor=cfg["max_attempts_factor"])
        save_csv(balanced, os.path.join(run_dir, f"balanced-{algorithm}.csv"))
        batch_provenance_to_json(batch, os.path.join(run_dir, "provenance.json"))
        record(stage, "complete", {"provenance": batch.provenance()})

        stage = "evaluate"
        mlp_cfg = _mlp_config(cfg)
        positive = class_counts(balanced).minority_label
        model, trace = mlp_train(balanced, validation, mlp_cfg,
                                 positive_label=positive)
        trace_to_csv(trace, os.path.join(run_dir, "trace.csv"))
        summary = {}
        for name, part in (("validation", validation), ("test", test)):
            probs = mlp_predict_batch(model, part.samples)
            targets = (part.labels == positive).astype(np.int64)
            report = classification_metrics(probs, targets, mlp_cfg.threshold,
                                            positive_label=positive)
            metrics_to_json(report, os.path.join(run_dir, f"metrics-{name}.json"))
            summary[name] = {"precision": report.precision, "recall": report.recall,
                             "f_measure": report.f_measure,
                             "accuracy": report.accuracy, "auc": report.auc}
        record(stage, "complete", {"metrics": summary})
    except GenerationBudgetError as e:
        batch_provenance_to_json(e.batch, os.path.join(run_dir, "provenance.json"))
        record(stage, "failed", {"error": str(e)})
        exit_code, error = EXIT_BUDGET, e
    except (DataInvariantError, SweepEvaluationError) as e:
        record(stage, "failed", {"error": str(e)})
        exit_code, error = EXIT_DATA, e
    except ConfigError as e:
        record(stage, "failed", {"error": str(e)})
        exit_code, error = EXIT_CONFIG, e

    for name in sorted(os.listdir(run_dir)):
        if name != "manifest.json":
            manifest["checksums"][name] = _sha256(os.path.join(run_dir, name))
    with open(os.path.join(run_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    if error is not None:
        print(f"error: {error}", file=sys.stderr)
        print(f"pipeline stopped at stage {manifest['stages'][-1]['name']}; "
              f"manifest in {run_dir}", file=sys.stderr)
        return exit_code
    print(f"pipeline complete; artifacts in {run_dir}")
    return EXIT_OK


_COMMANDS = {
    "synth": cmd_synth,
    "silhouette": cmd_silhouette,
    "imbalance-sweep": cmd_imbalance_sweep,
    "rebalance": cmd_rebalance,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            print("error: a command is required", file=sys.stderr)
            return EXIT_CONFIG
        if args.command == "synth":
            return cmd_synth({}, args)
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SweepEvaluationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except DataInvariantError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except GenerationBudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
