"""Configuration model, orchestration, and the command-line interface."""

import json
import struct

import numpy as np
import pytest

from harnack_lab.cli import main
from harnack_lab.config import (
    ConfigError,
    ExperimentConfig,
    diffusion_from_config,
    drift_from_config,
    space_time_function_from_config,
)
from harnack_lab.config import test_function_from_config as function_from_config
from harnack_lab.model import (
    GridDrift,
    IndicatorBoxDrift,
    LipschitzDrift,
    MollifiedIndicatorDrift,
    ZeroDrift,
)
from harnack_lab.runner import derive_seed, run_experiment, sweep, worker_count

BASE = {
    "drift": {"family": "zero", "p": 4, "q": 4, "params": {"dim": 1}},
    "diffusion": {"sigma": [[1.0]], "delta": 1.01},
    "T": 1.0,
    "n_steps": 32,
    "n_samples": 2000,
    "seed": 7,
    "kappa": 0.7,
    "checks": [
        {"check": "harnack", "x": [0.0], "y": [0.05], "p": 2.0,
         "f": {"tag": "constant", "c": 1.0}},
    ],
}


def make_config(tmp_path, raw=None):
    raw = dict(BASE if raw is None else raw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


class TestDriftFromConfig:
    def test_all_families(self):
        zero = drift_from_config({"family": "zero", "p": 4, "q": 4,
                                  "params": {"dim": 2}})
        assert isinstance(zero, ZeroDrift) and zero.dim_d == 2
        lip = drift_from_config({
            "family": "lipschitz", "p": 2, "q": 2,
            "params": {"linear": [[0.5]], "offset": [1.0]},
        })
        assert isinstance(lip, LipschitzDrift)
        box = drift_from_config({
            "family": "indicator_box", "p": 2, "q": 4,
            "params": {"amplitude": [1.0], "corner_low": [0.0],
                       "corner_high": [1.0]},
        })
        assert isinstance(box, IndicatorBoxDrift)
        molli = drift_from_config({
            "family": "mollified_indicator", "p": 4, "q": 8,
            "params": {"amplitude": [1.0], "corner_low": [0.0],
                       "corner_high": [1.0], "width": 0.2},
        })
        assert isinstance(molli, MollifiedIndicatorDrift)
        grid = drift_from_config({
            "family": "grid", "p": 2, "q": 4,
            "params": {"values": np.zeros((2, 3, 1)).tolist(), "t_max": 1.0,
                       "x_low": [0.0], "x_high": [1.0]},
        })
        assert isinstance(grid, GridDrift)

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="family"):
            drift_from_config({"family": "magnetic", "p": 2, "q": 2})

    def test_missing_key_named(self):
        with pytest.raises(ConfigError, match="'p'"):
            drift_from_config({"family": "zero", "q": 2, "params": {"dim": 1}})


class TestDiffusionFromConfig:
    def test_constant(self):
        diff = diffusion_from_config({"sigma": [[1.0]], "delta": 1.5})
        assert diff.sigma_at(0.0)[0, 0] == 1.0

    def test_schedule(self):
        diff = diffusion_from_config({
            "sigma": {"schedule": [[0.5, [[1.0]]], [1e9, [[1.1]]]]},
            "delta": 1.5,
        })
        assert diff.sigma_at(0.75)[0, 0] == 1.1


class TestFunctionFromConfig:
    def test_tags(self):
        for cfg in ({"tag": "constant"}, {"tag": "exponential", "u": [1.0]},
                    {"tag": "coordinate"}, {"tag": "square"},
                    {"tag": "indicator_box", "c_low": [0.0], "c_high": [1.0]},
                    {"tag": "smooth_bump", "center": [0.0]}):
            f = function_from_config(cfg)
            assert np.isfinite(f(np.zeros((2, 1)))).all()
        with pytest.raises(ConfigError):
            function_from_config({"tag": "mystery"})

    def test_space_time_kinds(self):
        box = space_time_function_from_config(
            {"kind": "box", "t_hi": 1.0, "c_low": [-1.0], "c_high": [1.0]}
        )
        assert box.lqp_norm(2.0, 2.0, 0.0, 1.0) > 0
        with pytest.raises(ConfigError):
            space_time_function_from_config({"kind": "mystery"})


class TestExperimentConfig:
    def test_round_trip(self, tmp_path):
        path = make_config(tmp_path)
        config = ExperimentConfig.from_file(str(path))
        assert json.loads(config.to_json()) == BASE

    def test_unknown_check_rejected(self):
        raw = dict(BASE, checks=[{"check": "levitation"}])
        with pytest.raises(ConfigError, match="levitation"):
            ExperimentConfig.from_dict(raw)

    def test_bad_kappa_rejected(self):
        with pytest.raises(ConfigError, match="kappa"):
            ExperimentConfig.from_dict(dict(BASE, kappa="guess"))

    def test_json_error_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "drift": \n}')
        with pytest.raises(ConfigError, match="line"):
            ExperimentConfig.from_file(str(path))


class TestRunner:
    def test_derive_seed_stable_and_labeled(self):
        assert derive_seed(1, "a") == derive_seed(1, "a")
        assert derive_seed(1, "a") != derive_seed(1, "b")
        assert derive_seed(1, "a") != derive_seed(2, "a")

    def test_worker_count_env(self, monkeypatch):
        monkeypatch.setenv("HARNACK_LAB_THREADS", "3")
        assert worker_count() == 3
        assert worker_count(override=5) == 5

    def test_run_experiment_writes_reports(self, tmp_path):
        config = ExperimentConfig.from_dict(dict(BASE))
        status, report = run_experiment(config, out_dir=str(tmp_path))
        assert status == 0
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "summary.csv").exists()
        assert report["kappa"] == 0.7
        assert report["checks"][0]["verdict"] == "Holds"

    def test_failed_check_gives_nonzero_status(self, tmp_path):
        # the sharp indicator drift has no translation modulus, so the
        # Harnack check errors out and the run reports it
        raw = dict(BASE)
        raw["drift"] = {
            "family": "indicator_box", "p": 4, "q": 8,
            "params": {"amplitude": [1.0], "corner_low": [0.0],
                       "corner_high": [1.0]},
        }
        config = ExperimentConfig.from_dict(raw)
        status, report = run_experiment(config, out_dir=str(tmp_path))
        assert status == 1
        assert "error" in report["checks"][0]

    def test_kappa_estimated_when_requested(self, tmp_path):
        raw = dict(BASE, kappa="estimate", n_samples=1000)
        config = ExperimentConfig.from_dict(raw)
        _, report = run_experiment(config, out_dir=str(tmp_path))
        assert report["kappa_source"] == "estimate"
        assert report["kappa"] > 0

    def test_sweep_outputs(self, tmp_path):
        config = ExperimentConfig.from_dict(dict(BASE))
        csv_path, svg_path = sweep(config, "displacement", [0.02, 0.04],
                                   out_dir=str(tmp_path))
        text = (tmp_path / "sweep.csv").read_text()
        assert "margin" in text.splitlines()[0]
        assert len(text.splitlines()) == 3
        svg = (tmp_path / "sweep.svg").read_text()
        assert svg.startswith("<svg") or "<svg" in svg

    def test_sweep_empty_grid_rejected(self, tmp_path):
        config = ExperimentConfig.from_dict(dict(BASE))
        with pytest.raises(ConfigError):
            sweep(config, "displacement", [], out_dir=str(tmp_path))


class TestCli:
    def test_run_subcommand(self, tmp_path):
        path = make_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        assert (out / "report.json").exists()

    def test_seed_override_changes_report(self, tmp_path):
        path = make_config(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["run", "--config", str(path), "--out", str(out1), "--seed", "1"])
        main(["run", "--config", str(path), "--out", str(out2), "--seed", "2"])
        r1 = json.loads((out1 / "report.json").read_text())
        r2 = json.loads((out2 / "report.json").read_text())
        assert r1["seed"] == 1 and r2["seed"] == 2

    def test_hypotheses_subcommand(self, tmp_path, capsys):
        path = make_config(tmp_path)
        assert main(["hypotheses", "--config", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["admissible_pq"] is True

    def test_estimate_kappa_subcommand(self, tmp_path, capsys):
        raw = dict(BASE, kappa="estimate", n_samples=1000)
        path = make_config(tmp_path, raw)
        assert main(["estimate-kappa", "--config", str(path)]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["kappa"] > 0 and out["source"] == "estimate"

    def test_verify_named_check(self, tmp_path, capsys):
        path = make_config(tmp_path)
        out = tmp_path / "out"
        code = main(["verify", "harnack", "--config", str(path),
                     "--out", str(out)])
        assert code == 0
        checks = json.loads(capsys.readouterr().out)
        assert checks[0]["name"] == "Harnack"

    def test_verify_unknown_check_exits_2(self, tmp_path):
        path = make_config(tmp_path)
        assert main(["verify", "nonsense", "--config", str(path)]) == 2

    def test_malformed_config_exits_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{nope}")
        assert main(["run", "--config", str(path)]) == 2

    def test_sweep_subcommand(self, tmp_path, capsys):
        path = make_config(tmp_path)
        out = tmp_path / "out"
        code = main(["sweep", "--config", str(path), "--out", str(out),
                     "--parameter", "displacement", "--values", "0.02,0.04"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].endswith("sweep.csv")
        assert lines[1].endswith("sweep.svg")

    def test_dump_paths_binary_format(self, tmp_path):
        path = make_config(tmp_path)
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out),
                     "--dump-paths"]) == 0
        blob = (out / "paths.bin").read_bytes()
        d, m, n_steps, count = struct.unpack_from("<4I", blob)
        assert (d, m, n_steps) == (1, 1, 32)
        per_path = 8 * ((n_steps + 1) * d + n_steps * m)
        assert len(blob) == 16 + count * per_path
        states = np.frombuffer(blob, dtype="<f8", count=n_steps + 1, offset=16)
        assert states[0] == 0.0  # paths start at the origin
