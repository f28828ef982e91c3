import json
from pathlib import Path

import numpy as np
import pytest

from empers import io
from empers.cli import main
from empers.compactness import counterexample_family
from empers.measure import BirthDeathPoint, MetricConfig, PersistenceMeasure, truncate

TINY_CONFIG = {
    "shapes": [
        {"kind": "circle", "instances": 4, "radius": 1.0},
        {"kind": "annulus", "instances": 4, "inner_radius": 1.0, "outer_radius": 2.0},
    ],
    "points_per_sample": 8,
    "samples_per_object": [1, 2],
    "homology_degrees": [0],
    "template_cell_side": 0.4,
    "polynomial_degree": 1,
    "master_seed": 7,
}


def write_tiny_config(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(TINY_CONFIG))
    return path


class TestDistanceCommand:
    def test_identical_files_give_zero(self, tmp_path, capsys):
        mu = PersistenceMeasure([((0, 1), 1.0), ((2, 5), 0.5)])
        a = tmp_path / "a.json"
        io.write_measure_json(a, mu)
        assert main(["distance", str(a), str(a)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ot_infinity"] == 0.0

    def test_dirac_pair_prints_diagonal_distance(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.write_measure_json(a, PersistenceMeasure([((0, 1), 1.0)]))
        io.write_measure_json(b, PersistenceMeasure([((0, 1), 2.0)]))
        coupling_out = tmp_path / "coupling.json"
        assert main(["distance", str(a), str(b), "--coupling", str(coupling_out)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["ot_infinity"] == 0.5
        coupling = json.loads(coupling_out.read_text())
        assert {p["target"] for p in coupling["pairs"]} == {0}
        assert {p["source"] for p in coupling["pairs"]} == {0, "diagonal"}

    def test_truncation_distance_within_eps(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        b = rng.uniform(-1, 1, 10)
        mu = PersistenceMeasure.from_arrays(
            np.column_stack([b, b + rng.uniform(0.05, 2, 10)]), rng.uniform(0.1, 1, 10))
        a, t = tmp_path / "a.json", tmp_path / "t.json"
        io.write_measure_json(a, mu)
        io.write_measure_json(t, truncate(mu, 0.5))
        assert main(["distance", str(a), str(t)]) == 0
        assert json.loads(capsys.readouterr().out)["ot_infinity"] <= 0.5 + 1e-9

    def test_q_mismatch_is_a_data_error(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.write_measure_json(a, PersistenceMeasure(), MetricConfig(1.0))
        io.write_measure_json(b, PersistenceMeasure(), MetricConfig(2.0))
        assert main(["distance", str(a), str(b)]) == 3
        assert main(["distance", str(a), str(b), "--q", "inf"]) == 0

    def test_missing_file_is_a_data_error(self, tmp_path):
        assert main(["distance", str(tmp_path / "nope.json"),
                     str(tmp_path / "nope2.json")]) == 3


class TestDiagnoseCommand:
    def test_counterexample_family_report(self, tmp_path, capsys):
        d = tmp_path / "family"
        d.mkdir()
        for i, mu in enumerate(counterexample_family(BirthDeathPoint(0, 1), 6)):
            io.write_measure_json(d / f"m{i}.json", mu)
        assert main(["diagnose", "--measures", str(d), "--eps", "0.25", "0.5",
                     "--bands", "1", "5"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["n_measures"] == 6
        assert report["diameter_upper_bound"] == 0.5
        uodf = report["uodf_profile"]
        assert max(uodf.values()) == 1.0

    def test_singleton_directory(self, tmp_path, capsys):
        d = tmp_path / "one"
        d.mkdir()
        io.write_measure_json(d / "m.json", PersistenceMeasure([((0, 2), 1.0)]))
        assert main(["diagnose", "--measures", str(d)]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["diameter_upper_bound"] == 0.0

    def test_empty_directory_is_a_data_error(self, tmp_path):
        d = tmp_path / "empty"
        d.mkdir()
        assert main(["diagnose", "--measures", str(d)]) == 3

    def test_profiles_monotone(self, tmp_path, capsys):
        d = tmp_path / "family"
        d.mkdir()
        rng = np.random.default_rng(3)
        for i in range(4):
            b = rng.uniform(-4, 4, 5)
            mu = PersistenceMeasure.from_arrays(
                np.column_stack([b, b + rng.uniform(0.1, 3, 5)]), rng.uniform(0.2, 2, 5))
            io.write_measure_json(d / f"m{i}.json", mu)
        assert main(["diagnose", "--measures", str(d), "--eps", "0.2", "0.8", "2.0",
                     "--bands", "1", "3", "8"]) == 0
        report = json.loads(capsys.readouterr().out)
        uodf = [report["uodf_profile"][k] for k in ("0.2", "0.8", "2.0")]
        assert uodf == sorted(uodf, reverse=True)
        for by_n in report["odut_profile"].values():
            vals = [by_n[k] for k in ("1", "3", "8")]
            assert vals == sorted(vals, reverse=True)


class TestPipelineCommands:
    def test_sample_is_deterministic_and_counts_match(self, tmp_path, capsys):
        cfgp = write_tiny_config(tmp_path)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        assert main(["sample", "--config", str(cfgp), "--out", str(out1)]) == 0
        assert main(["sample", "--config", str(cfgp), "--out", str(out2)]) == 0
        files1 = sorted(out1.glob("*.csv"))
        # 2 classes x 4 instances x max(samples_per_object)=2 repeats
        assert len(files1) == 16
        for f in files1:
            assert f.read_bytes() == (out2 / f.name).read_bytes()

    def test_diagram_then_featurize_then_train(self, tmp_path, capsys):
        cfgp = write_tiny_config(tmp_path)
        clouds = tmp_path / "clouds"
        diagrams = tmp_path / "diagrams"
        assert main(["sample", "--config", str(cfgp), "--out", str(clouds)]) == 0
        assert main(["diagram", "--config", str(cfgp), "--in", str(clouds),
                     "--out", str(diagrams)]) == 0
        assert len(list(diagrams.glob("*__h0.csv"))) == 16
        features = tmp_path / "features.csv"
        assert main(["featurize", "--config", str(cfgp), "--diagrams", str(diagrams),
                     "--samples-per-object", "2", "--out", str(features)]) == 0
        matrix, labels, ids = io.read_feature_csv(features)
        assert matrix.shape[0] == 8 and sorted(set(labels)) == ["annulus", "circle"]
        assert (features.parent / "templates_h0.json").exists()
        model_dir = tmp_path / "model"
        assert main(["train", "--config", str(cfgp), "--features", str(features),
                     "--out", str(model_dir)]) == 0
        metrics = json.loads((model_dir / "metrics.json").read_text())
        assert 0.0 <= metrics["test"]["accuracy"] <= 1.0
        assert len(metrics["test"]["confusion_matrix"]) == 2
        # evaluate the stored model on the training features
        assert main(["evaluate", "--model", str(model_dir / "model.json"),
                     "--features", str(features)]) == 0

    def test_diagram_empty_dir_warns(self, tmp_path, capsys):
        cfgp = write_tiny_config(tmp_path)
        empty = tmp_path / "empty"
        empty.mkdir()
        assert main(["diagram", "--config", str(cfgp), "--in", str(empty),
                     "--out", str(tmp_path / "d")]) == 0
        assert "no point clouds" in capsys.readouterr().err


class TestRunExperiment:
    def test_end_to_end_smoke_and_determinism(self, tmp_path, capsys):
        cfgp = write_tiny_config(tmp_path)
        out1, out2 = tmp_path / "run1", tmp_path / "run2"
        assert main(["run-experiment", "--config", str(cfgp), "--out", str(out1)]) == 0
        assert main(["run-experiment", "--config", str(cfgp), "--out", str(out2)]) == 0
        table = (out1 / "accuracy_table.csv").read_text()
        assert table.splitlines()[0] == "samples_per_object,test_accuracy"
        assert len(table.strip().splitlines()) == 3
        for m in (1, 2):
            m1 = (out1 / f"metrics_m{m:03d}.json").read_bytes()
            m2 = (out2 / f"metrics_m{m:03d}.json").read_bytes()
            assert m1 == m2
        manifest = json.loads((out1 / "manifest.json").read_text())
        for stage in manifest["stages"].values():
            for p in stage["outputs"]:
                assert Path(p).exists()

    def test_resume_skips_completed_stages(self, tmp_path, capsys):
        cfgp = write_tiny_config(tmp_path)
        out = tmp_path / "run"
        assert main(["run-experiment", "--config", str(cfgp), "--out", str(out)]) == 0
        assert main(["run-experiment", "--config", str(cfgp), "--out", str(out),
                     "--resume"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["stages"]["sample"].get("resumed") is True
        assert manifest["stages"]["diagram"].get("resumed") is True


class TestExitCodes:
    def test_unknown_config_field_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"not_a_field": 1}')
        assert main(["sample", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_json_config(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{")
        assert main(["sample", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_missing_out_is_config_error(self, tmp_path):
        cfgp = write_tiny_config(tmp_path)
        assert main(["sample", "--config", str(cfgp)]) == 2

    def test_malformed_measure_is_data_error(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text('{"atoms": "nope"}')
        assert main(["distance", str(p), str(p)]) == 3
