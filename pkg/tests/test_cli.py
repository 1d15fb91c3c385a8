import csv
import json
import os

import pytest

from nlisaacs.cli import main


def run(args):
    return main(args)


class TestSelftest:
    def test_passes(self, tmp_path, capsys):
        assert run(["selftest", "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out
        report = json.loads((tmp_path / "selftest.json").read_text())
        assert report["all_pass"] is True


class TestThresholds:
    def test_emits_csv_json_manifest(self, tmp_path):
        assert run(["thresholds", "--c", "2.0", "--s", "0.75",
                    "--out", str(tmp_path)]) == 0
        for name in ("thresholds.csv", "thresholds.json", "manifest.json"):
            assert (tmp_path / name).exists()
        with open(tmp_path / "thresholds.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0][0] == "c" and len(rows) == 2

    def test_sweep_row_count(self, tmp_path):
        assert run(["thresholds", "--c", "1.2,1.5,2.0", "--s", "0.75",
                    "--out", str(tmp_path)]) == 0
        with open(tmp_path / "thresholds.csv", newline="") as fh:
            assert len(list(csv.reader(fh))) == 4

    def test_determinism(self, tmp_path):
        d1, d2 = tmp_path / "a", tmp_path / "b"
        for d in (d1, d2):
            assert run(["thresholds", "--c", "1.4", "--s", "0.8",
                        "--out", str(d)]) == 0
        assert (d1 / "thresholds.csv").read_bytes() == \
            (d2 / "thresholds.csv").read_bytes()
        assert (d1 / "thresholds.json").read_bytes() == \
            (d2 / "thresholds.json").read_bytes()

    def test_lf_line_endings(self, tmp_path):
        assert run(["thresholds", "--c", "2.0", "--out", str(tmp_path)]) == 0
        raw = (tmp_path / "thresholds.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")


class TestOperatorEval:
    def test_gaussian_point(self, tmp_path):
        assert run(["operator-eval", "--profile", "gaussian", "--s", "0.75",
                    "--dimension", "2", "--x", "0.3,0.1",
                    "--directions", "16", "--out", str(tmp_path)]) == 0
        with open(tmp_path / "operator_eval.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x1", "x2", "value", "min_dir1", "min_dir2",
                           "max_dir1", "max_dir2", "truncation_error",
                           "quadrature_error"]
        assert float(rows[1][2]) < 0.0  # concave bump at this point

    def test_missing_s_is_config_error(self, tmp_path):
        assert run(["operator-eval", "--profile", "gaussian",
                    "--out", str(tmp_path)]) == 2


class TestSolve:
    def test_interval_preset(self, tmp_path):
        assert run(["solve", "--preset", "interval-f-minus-one",
                    "--s", "0.8", "--h", "0.02", "--tol", "1e-6",
                    "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "solve_report.json").read_text())
        assert report["converged"] is True
        with open(tmp_path / "solution.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["x1", "value"]
        vals = [float(r[1]) for r in rows[1:]]
        assert max(vals) > 0.0 and min(vals) >= 0.0

    def test_unknown_preset(self, tmp_path):
        assert run(["solve", "--preset", "nope", "--out",
                    str(tmp_path)]) == 2

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"s": 0.8, "domain": "ball:0:1",
                                   "h": 0.05, "directions": 1,
                                   "f-const": -1.0, "tol": 1e-5}))
        assert run(["solve", "--config", str(cfg), "--h", "0.1",
                    "--out", str(tmp_path)]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["parameters"]["h"] == 0.1  # flag beats config


class TestBarrierCheck:
    def test_ball_report(self, tmp_path):
        assert run(["barrier-check", "--s", "0.8", "--alpha", "0.4",
                    "--mu", "0.1", "--h", "0.03125",
                    "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "barrier_report.json").read_text())
        assert report["violated"] is False and report["m_hat"] > 0.0


class TestHolderFit:
    def test_profile_fit(self, tmp_path):
        assert run(["holder-fit", "--profile", "radial-power",
                    "--beta", "0.5", "--dimension", "2",
                    "--domain", "ball:0,0:1", "--seed", "0",
                    "--out", str(tmp_path)]) == 0
        report = json.loads((tmp_path / "holder_fit.json").read_text())
        assert abs(report["alpha_hat"] - 0.5) < 0.05
        with open(tmp_path / "holder_scales.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["scale", "amplitude"] and len(rows) >= 5
