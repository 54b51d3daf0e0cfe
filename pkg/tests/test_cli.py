import json

import numpy as np
import pytest
from click.testing import CliRunner

from inpr.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def two_row_csv(tmp_path):
    p = tmp_path / "data.csv"
    p.write_text("source_id,x1,y\n0,0.5,1.0\n1,0.25,2.0\n")
    return p


@pytest.fixture
def sim_csv(tmp_path):
    # smooth 1-d data: target plus one mildly shifted source
    rng = np.random.default_rng(0)
    rows = ["source_id,x1,y"]
    for sid, n, shift in ((0, 40, 0.0), (1, 20, 0.3)):
        xs = rng.random(n)
        ys = np.sin(2 * np.pi * xs) + shift + 0.1 * rng.normal(size=n)
        rows += [f"{sid},{float(x)!r},{float(y)!r}" for x, y in zip(xs, ys)]
    p = tmp_path / "sim.csv"
    p.write_text("\n".join(rows) + "\n")
    return p


def read_curve(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    body = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    return header, body


class TestFit:
    def test_smoke_two_rows_fixed_lambda(self, runner, two_row_csv, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main, ["fit", "--data", str(two_row_csv), "--out", str(out), "--lambda", "0.1"]
        )
        assert result.exit_code == 0, result.output
        header, body = read_curve(out / "curve.csv")
        assert header == ["x1", "estimate"]
        assert np.all(np.isfinite(body))
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "fit"
        assert manifest["lambda_used"] == 0.1

    def test_ds_mode_gcv(self, runner, sim_csv, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["fit", "--data", str(sim_csv), "--out", str(out), "--mode", "ds",
             "--grid-size", "51"],
        )
        assert result.exit_code == 0, result.output
        _, body = read_curve(out / "curve.csv")
        assert body.shape == (51, 2)
        assert np.all(np.isfinite(body))

    def test_exponential_kernel_grid_spans_data(self, runner, tmp_path):
        p = tmp_path / "wide.csv"
        p.write_text("source_id,x1,y\n0,-2.0,1.0\n0,3.0,2.0\n0,0.5,0.0\n")
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["fit", "--data", str(p), "--out", str(out), "--kernel", "exp",
             "--lambda", "0.5", "--grid-size", "11"],
        )
        assert result.exit_code == 0, result.output
        _, body = read_curve(out / "curve.csv")
        assert body[0, 0] == pytest.approx(-2.0)
        assert body[-1, 0] == pytest.approx(3.0)

    def test_missing_target_fails_cleanly(self, runner, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("source_id,x1,y\n1,0.5,1.0\n")
        result = runner.invoke(
            main, ["fit", "--data", str(p), "--out", str(tmp_path / "o"), "--lambda", "0.1"]
        )
        assert result.exit_code != 0
        assert "source_id 0" in result.output

    def test_missing_data_argument(self, runner, tmp_path):
        result = runner.invoke(main, ["fit", "--out", str(tmp_path / "o")])
        assert result.exit_code != 0
        assert "input CSV" in result.output

    def test_rerun_fit_from_manifest_alone(self, runner, two_row_csv, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        r1 = runner.invoke(
            main,
            ["fit", "--data", str(two_row_csv), "--out", str(out1),
             "--lambda", "0.25", "--grid-size", "41"],
        )
        assert r1.exit_code == 0, r1.output
        r2 = runner.invoke(
            main, ["fit", "--config", str(out1 / "manifest.json"), "--out", str(out2)]
        )
        assert r2.exit_code == 0, r2.output
        assert (out1 / "curve.csv").read_bytes() == (out2 / "curve.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()


class TestCi:
    def test_interval_columns_ordered(self, runner, sim_csv, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["ci", "--data", str(sim_csv), "--out", str(out), "--B", "60",
             "--alpha", "0.1", "--grid-size", "31"],
        )
        assert result.exit_code == 0, result.output
        header, body = read_curve(out / "curve.csv")
        assert header == ["x1", "estimate", "lower", "upper"]
        assert np.all(body[:, 2] <= body[:, 1] + 1e-12)
        assert np.all(body[:, 1] <= body[:, 3] + 1e-12)

    def test_aliased_config_keys_honored(self, runner, sim_csv, tmp_path):
        # keys whose click parameter name differs (B, lambda, data) must
        # still load from a config file
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"data": str(sim_csv), "B": 30, "lambda": 0.05}))
        out = tmp_path / "out"
        r = runner.invoke(
            main, ["ci", "--config", str(cfg), "--out", str(out), "--grid-size", "11"]
        )
        assert r.exit_code == 0, r.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["B"] == 30
        assert manifest["lambda_used"] == 0.05
        assert manifest["config"]["data"] == str(sim_csv)


class TestRegion:
    def test_radius_and_membership(self, runner, sim_csv, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(
            main,
            ["region", "--data", str(sim_csv), "--out", str(out), "--B", "60"],
        )
        assert result.exit_code == 0, result.output
        region = json.loads((out / "region.json").read_text())
        assert region["radius"] >= 0
        header, body = read_curve(out / "design_values.csv")
        assert header == ["x1", "estimate"]

        # the base curve itself must belong to its own region
        curve = tmp_path / "test_curve.csv"
        curve.write_text("value\n" + "\n".join(repr(float(v)) for v in body[:, 1]) + "\n")
        out2 = tmp_path / "out2"
        result2 = runner.invoke(
            main,
            ["region", "--data", str(sim_csv), "--out", str(out2), "--B", "60",
             "--test-curve", str(curve)],
        )
        assert result2.exit_code == 0, result2.output
        region2 = json.loads((out2 / "region.json").read_text())
        assert region2["contains_test_curve"] is True


class TestSimulateAndManifest:
    def test_byte_identical_reruns(self, runner, tmp_path):
        args = ["simulate", "--n0", "20", "--ratios", "0,0.5", "--tau", "0.1",
                "--reps", "2", "--seed", "11", "--ise-grid-size", "100"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        r1 = runner.invoke(main, args + ["--out", str(out1)])
        r2 = runner.invoke(main, args + ["--out", str(out2)])
        assert r1.exit_code == 0, r1.output
        assert r2.exit_code == 0, r2.output
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_rerun_from_manifest(self, runner, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        r1 = runner.invoke(
            main,
            ["simulate", "--n0", "20", "--ratios", "0,1", "--tau", "0.05",
             "--reps", "2", "--seed", "3", "--ise-grid-size", "100", "--out", str(out1)],
        )
        assert r1.exit_code == 0, r1.output
        r2 = runner.invoke(
            main,
            ["simulate", "--config", str(out1 / "manifest.json"), "--out", str(out2)],
        )
        assert r2.exit_code == 0, r2.output
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
        assert (out1 / "manifest.json").read_bytes() == (out2 / "manifest.json").read_bytes()

    def test_flags_override_config_file(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n0": 20, "ratios": "0", "reps": 1, "seed": 5,
                                   "ise_grid_size": 100}))
        out = tmp_path / "o"
        r = runner.invoke(
            main, ["simulate", "--config", str(cfg), "--seed", "6", "--out", str(out)]
        )
        assert r.exit_code == 0, r.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 6
        assert manifest["config"]["n0"] == 20

    def test_env_var_sets_default_threads(self, runner, tmp_path):
        out = tmp_path / "o"
        r = runner.invoke(
            main,
            ["simulate", "--n0", "20", "--ratios", "0", "--reps", "1",
             "--ise-grid-size", "100", "--out", str(out)],
            env={"INPR_THREADS": "2"},
        )
        assert r.exit_code == 0, r.output
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["threads"] == 2

    def test_unknown_config_keys_rejected(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_zero": 20}))
        r = runner.invoke(
            main, ["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]
        )
        assert r.exit_code != 0
        assert "unknown config keys" in r.output

    def test_inputs_never_mutated(self, runner, sim_csv, tmp_path):
        before = sim_csv.read_bytes()
        runner.invoke(
            main, ["fit", "--data", str(sim_csv), "--out", str(tmp_path / "o"),
                   "--lambda", "0.01"]
        )
        assert sim_csv.read_bytes() == before


class TestCoverageCommand:
    def test_smoke(self, runner, tmp_path):
        out = tmp_path / "cov"
        r = runner.invoke(
            main,
            ["coverage", "--n0", "16", "--ratios", "0", "--tau", "0.05",
             "--reps", "2", "--seed", "1", "--B", "50", "--eval-grid-size", "11",
             "--out", str(out)],
        )
        assert r.exit_code == 0, r.output
        text = (out / "report.csv").read_text()
        assert "coverage_avg" in text
        assert "region_coverage" in text


class TestRateCheckCommand:
    def test_smoke(self, runner, tmp_path):
        out = tmp_path / "rate"
        r = runner.invoke(
            main,
            ["rate-check", "--ns", "16,24,32", "--reps", "2", "--seed", "2",
             "--ise-grid-size", "100", "--out", str(out)],
        )
        assert r.exit_code == 0, r.output
        summary = json.loads((out / "summary.json").read_text())
        assert np.isfinite(summary["rate_slope"])


class TestDiagnoseCommand:
    def test_stdout_json(self, runner):
        r = runner.invoke(
            main,
            ["diagnose", "--beta", "2", "--dim", "1", "--lambda", "1e-4",
             "--sizes", "200,1600"],
        )
        assert r.exit_code == 0, r.output
        payload = json.loads(r.output)
        assert payload["effective_dimension"] > 0
        assert payload["balance"]["flagged"] == [0]
        assert payload["balance"]["threshold"] == pytest.approx(1800**0.875)

    def test_exponential_law(self, runner):
        r = runner.invoke(main, ["diagnose", "--law", "exp", "--beta", "1",
                                 "--lambda", "0.1"])
        assert r.exit_code == 0, r.output
        payload = json.loads(r.output)
        assert payload["effective_dimension"] > 0
