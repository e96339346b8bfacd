"""Exit codes, config layering, and the artifacts each subcommand writes."""

import json
import os

import numpy as np
import pytest

from silsample.cli import EXIT_BUDGET, EXIT_CONFIG, EXIT_DATA, EXIT_OK, main
from silsample.data import Dataset, imbalance_degree, load_csv, save_csv

from helpers import two_cluster


def _write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _synth_csv(tmp_path, minority=40, majority=80, n=3, separation=8.0,
               seed=0, name="input.csv"):
    path = tmp_path / name
    save_csv(two_cluster(minority, majority, n=n, separation=separation,
                         seed=seed), path)
    return str(path)


# ------------------------------------------------------------ exit codes


def test_no_command_is_a_usage_error(capsys):
    assert main([]) == EXIT_CONFIG
    assert "a command is required" in capsys.readouterr().err


def test_unknown_command_is_a_usage_error(capsys):
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_version_flag():
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0


def test_missing_input_file_is_a_data_error(tmp_path, capsys):
    code = main(["silhouette", "--input", str(tmp_path / "nope.csv"),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_DATA
    assert "missing file" in capsys.readouterr().err


def test_no_input_at_all_is_a_config_error(tmp_path, capsys):
    code = main(["silhouette", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "no input dataset" in capsys.readouterr().err


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"frobs": 3})
    code = main(["silhouette", "--config", cfg,
                 "--input", _synth_csv(tmp_path)])
    assert code == EXIT_CONFIG
    assert "unknown config key 'frobs'" in capsys.readouterr().err


def test_malformed_config_json_is_rejected(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code = main(["silhouette", "--config", str(path),
                 "--input", _synth_csv(tmp_path)])
    assert code == EXIT_CONFIG
    assert "not valid JSON" in capsys.readouterr().err


def test_zero_epochs_is_rejected(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"epochs": 0})
    code = main(["evaluate", "--config", cfg, "--input", _synth_csv(tmp_path),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "no training performed" in capsys.readouterr().err


def test_negative_learning_rate_is_rejected(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"learning_rate": -0.1})
    code = main(["evaluate", "--config", cfg, "--input", _synth_csv(tmp_path),
                 "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "non-negative" in capsys.readouterr().err


def test_descending_fraction_list_is_rejected(tmp_path, capsys):
    code = main(["imbalance-sweep", "--input", _synth_csv(tmp_path),
                 "--fractions", "0.5,0.4", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "strictly ascending" in capsys.readouterr().err


def test_unknown_order_token_is_rejected(tmp_path, capsys):
    code = main(["imbalance-sweep", "--input", _synth_csv(tmp_path),
                 "--order", "diagonal", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "unknown order" in capsys.readouterr().err


def test_unparseable_fractions_are_rejected(tmp_path, capsys):
    code = main(["imbalance-sweep", "--input", _synth_csv(tmp_path),
                 "--fractions", "0.1,banana", "--out", str(tmp_path / "out")])
    assert code == EXIT_CONFIG
    assert "cannot parse fractions" in capsys.readouterr().err


# ----------------------------------------------------------------- synth


def test_synth_writes_the_requested_mixture(tmp_path, capsys):
    path = tmp_path / "synthetic.csv"
    code = main(["synth", "--out", str(path), "--seed", "1",
                 "--minority-count", "30", "--majority-count", "70",
                 "--n-features", "4"])
    assert code == EXIT_OK
    d = load_csv(path)
    assert d.m == 100
    assert d.n == 4
    assert imbalance_degree(d) == pytest.approx(30 / 70)
    assert "ID=0.4286" in capsys.readouterr().out


def test_synth_then_silhouette_flow(tmp_path):
    data_path = tmp_path / "flow.csv"
    assert main(["synth", "--out", str(data_path), "--seed", "2",
                 "--minority-count", "25", "--majority-count", "50",
                 "--n-features", "3"]) == EXIT_OK
    out = tmp_path / "out"
    assert main(["silhouette", "--input", str(data_path),
                 "--out", str(out)]) == EXIT_OK
    assert (out / "silhouette-0.csv").is_file()
    assert (out / "silhouette-0.json").is_file()


# ------------------------------------------------------------ silhouette


def test_silhouette_rerun_is_byte_identical(tmp_path):
    data_path = _synth_csv(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert main(["silhouette", "--input", data_path,
                     "--out", str(out), "--seed", "3"]) == EXIT_OK
    for name in ("silhouette-3.csv", "silhouette-3.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_cli_seed_overrides_config_seed(tmp_path):
    cfg = _write_config(tmp_path, {"seed": 5})
    out = tmp_path / "out"
    assert main(["silhouette", "--config", cfg, "--input", _synth_csv(tmp_path),
                 "--out", str(out), "--seed", "7"]) == EXIT_OK
    assert (out / "silhouette-7.csv").is_file()
    assert not (out / "silhouette-5.csv").exists()


def test_config_seed_applies_without_cli_override(tmp_path):
    cfg = _write_config(tmp_path, {"seed": 5})
    out = tmp_path / "out"
    assert main(["silhouette", "--config", cfg, "--input", _synth_csv(tmp_path),
                 "--out", str(out)]) == EXIT_OK
    assert (out / "silhouette-5.csv").is_file()


def test_silhouette_json_reports_bins(tmp_path):
    out = tmp_path / "out"
    # the = form keeps argparse from reading the leading minus as a flag
    assert main(["silhouette", "--input", _synth_csv(tmp_path),
                 "--out", str(out), "--bins=-0.2,0.2"]) == EXIT_OK
    with open(out / "silhouette-0.json") as fh:
        payload = json.load(fh)
    assert payload["bin_thresholds"] == [-0.2, 0.2]
    assert sum(entry["count"] for entry in payload["bins"]) == payload["m"]


# --------------------------------------------------------------- sweep


def test_sweep_single_fraction_single_row(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 2})
    out = tmp_path / "out"
    code = main(["imbalance-sweep", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 30, 45, n=3),
                 "--fractions", "0.5", "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / "imbalance-sweep-desc-0.csv").read_text().splitlines()
    assert len(lines) == 2


def test_sweep_writes_one_file_pair_per_order(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 2})
    out = tmp_path / "out"
    code = main(["imbalance-sweep", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 30, 45, n=3),
                 "--order", "desc,random", "--fractions", "0.3",
                 "--out", str(out)])
    assert code == EXIT_OK
    for token in ("desc", "random"):
        assert (out / f"imbalance-sweep-{token}-0.csv").is_file()
        assert (out / f"imbalance-sweep-{token}-0.json").is_file()


def test_sweep_default_fraction_grid_yields_nineteen_rows(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 1})
    out = tmp_path / "out"
    code = main(["imbalance-sweep", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 60, 90, n=3),
                 "--out", str(out)])
    assert code == EXIT_OK
    lines = (out / "imbalance-sweep-desc-0.csv").read_text().splitlines()
    assert len(lines) == 20


# ------------------------------------------------------------- rebalance


def test_rebalance_with_split_writes_all_parts(tmp_path):
    out = tmp_path / "out"
    code = main(["rebalance", "--input", _synth_csv(tmp_path, 40, 80),
                 "--algorithm", "smote", "--out", str(out)])
    assert code == EXIT_OK
    stem = out / "rebalance-smote-0"
    for suffix in (".csv", "-validation.csv", "-test.csv", "-batch.csv",
                   "-provenance.json"):
        assert (out / f"rebalance-smote-0{suffix}").is_file(), suffix
    balanced = load_csv(str(stem) + ".csv")
    assert imbalance_degree(balanced) == 1.0


def test_rebalance_no_split_on_balanced_input_is_identity(tmp_path):
    balanced = two_cluster(20, 20, n=3, seed=4)
    input_path = tmp_path / "balanced.csv"
    save_csv(balanced, input_path)
    out = tmp_path / "out"
    code = main(["rebalance", "--input", str(input_path), "--no-split",
                 "--algorithm", "g1no", "--out", str(out)])
    assert code == EXIT_OK
    produced = out / "rebalance-g1no-0.csv"
    assert produced.read_bytes() == input_path.read_bytes()
    with open(out / "rebalance-g1no-0-provenance.json") as fh:
        provenance = json.load(fh)
    assert provenance["accepted_count"] == 0
    assert provenance["attempts"] == 0


def test_rebalance_budget_exhaustion_exit_code(tmp_path, capsys):
    # identical minority rows: sigma is zero, every draw duplicates the
    # training data, so the attempt budget runs out without progress
    rng = np.random.default_rng(5)
    samples = np.vstack([np.full((3, 2), 7.0), rng.normal(size=(10, 2))])
    labels = ["pos"] * 3 + ["neg"] * 10
    input_path = tmp_path / "starved.csv"
    save_csv(Dataset(samples, labels, ["x0", "x1"]), input_path)
    cfg = _write_config(tmp_path, {"max_attempts_factor": 2})
    out = tmp_path / "out"
    code = main(["rebalance", "--config", cfg, "--input", str(input_path),
                 "--no-split", "--algorithm", "g1no", "--out", str(out)])
    assert code == EXIT_BUDGET
    assert "attempt budget exhausted" in capsys.readouterr().err
    assert (out / "rebalance-g1no-0-provenance.json").is_file()
    assert not (out / "rebalance-g1no-0.csv").exists()
    with open(out / "rebalance-g1no-0-provenance.json") as fh:
        provenance = json.load(fh)
    assert provenance["accepted_count"] < 7
    assert provenance["attempts"] == 2 * 7


# -------------------------------------------------------------- evaluate


def test_evaluate_writes_metrics_and_correlation(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 3})
    out = tmp_path / "out"
    code = main(["evaluate", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 40, 80), "--out", str(out),
                 "--pairplot"])
    assert code == EXIT_OK
    for name in ("evaluate-0-trace.csv", "evaluate-0-metrics-validation.json",
                 "evaluate-0-metrics-validation.csv",
                 "evaluate-0-metrics-test.json", "evaluate-0-metrics-test.csv",
                 "evaluate-0-correlation.csv", "evaluate-0-correlation.json",
                 "evaluate-0-pairplot.csv"):
        assert (out / name).is_file(), name
    trace_lines = (out / "evaluate-0-trace.csv").read_text().splitlines()
    assert len(trace_lines) == 4  # header plus one row per epoch
    with open(out / "evaluate-0-metrics-test.json") as fh:
        report = json.load(fh)
    assert {"precision", "recall", "f_measure", "accuracy",
            "auc"} <= set(report)


def test_evaluate_without_pairplot_flag_skips_it(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 1})
    out = tmp_path / "out"
    assert main(["evaluate", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 30, 60),
                 "--out", str(out)]) == EXIT_OK
    assert not (out / "evaluate-0-pairplot.csv").exists()


# -------------------------------------------------------------- pipeline


def _run_dirs(out):
    return sorted(p for p in out.iterdir() if p.is_dir())


def test_pipeline_happy_path_manifest(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 3, "fractions": [0.25]})
    out = tmp_path / "out"
    code = main(["pipeline", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 40, 80),
                 "--algorithm", "g1no", "--out", str(out)])
    assert code == EXIT_OK
    (run_dir,) = _run_dirs(out)
    with open(run_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    assert [s["name"] for s in manifest["stages"]] == \
        ["sweep", "rebalance", "evaluate"]
    assert all(s["status"] == "complete" for s in manifest["stages"])
    for name in ("sweep-0.csv", "sweep-0.json", "imbalanced-train.csv",
                 "balanced-g1no.csv", "provenance.json", "trace.csv",
                 "metrics-validation.json", "metrics-test.json"):
        assert name in manifest["checksums"], name
        assert (run_dir / name).is_file(), name
    balanced = load_csv(run_dir / "balanced-g1no.csv")
    assert imbalance_degree(balanced) == 1.0


def test_pipeline_rerun_reproduces_checksums(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 2, "fractions": [0.3]})
    data_path = _synth_csv(tmp_path, 30, 60)
    out = tmp_path / "out"
    for _ in range(2):
        assert main(["pipeline", "--config", cfg, "--input", data_path,
                     "--algorithm", "smote", "--out", str(out)]) == EXIT_OK
    first, second = _run_dirs(out)
    with open(first / "manifest.json") as fh:
        a = json.load(fh)
    with open(second / "manifest.json") as fh:
        b = json.load(fh)
    assert a["checksums"] == b["checksums"]
    assert a == b


def test_pipeline_starved_rebalance_skips_evaluate(tmp_path, capsys):
    rng = np.random.default_rng(6)
    samples = np.vstack([np.full((12, 3), 9.0), rng.normal(size=(30, 3))])
    labels = ["pos"] * 12 + ["neg"] * 30
    input_path = tmp_path / "starved.csv"
    save_csv(Dataset(samples, labels, ["x0", "x1", "x2"]), input_path)
    cfg = _write_config(tmp_path, {"epochs": 2, "fractions": [0.5],
                                   "max_attempts_factor": 2})
    out = tmp_path / "out"
    code = main(["pipeline", "--config", cfg, "--input", str(input_path),
                 "--algorithm", "g1no", "--out", str(out)])
    assert code == EXIT_BUDGET
    assert "attempt budget exhausted" in capsys.readouterr().err
    (run_dir,) = _run_dirs(out)
    with open(run_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    stages = {s["name"]: s["status"] for s in manifest["stages"]}
    assert stages == {"sweep": "complete", "rebalance": "failed"}
    assert (run_dir / "provenance.json").is_file()
    assert not (run_dir / "balanced-g1no.csv").exists()
    assert "manifest.json" not in manifest["checksums"]


def test_pipeline_manifest_echoes_config(tmp_path):
    cfg = _write_config(tmp_path, {"epochs": 1, "fractions": [0.2], "seed": 9})
    out = tmp_path / "out"
    assert main(["pipeline", "--config", cfg,
                 "--input", _synth_csv(tmp_path, 30, 60),
                 "--algorithm", "adasyn", "--out", str(out)]) == EXIT_OK
    (run_dir,) = _run_dirs(out)
    with open(run_dir / "manifest.json") as fh:
        manifest = json.load(fh)
    assert manifest["config"]["seed"] == 9
    assert manifest["config"]["algorithm"] == "adasyn"
    assert manifest["command"] == "pipeline"
    assert list(manifest["config"]) == sorted(manifest["config"])
