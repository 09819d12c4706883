"""Config parsing/validation and the command-line surface."""

import json
from pathlib import Path

import numpy as np
import pytest

from catapult_lab.cli import main
from catapult_lab.config import (
    ConfigError,
    ExperimentConfig,
    config_hash,
    parse_config,
)
from catapult_lab.trajectory import Trajectory

MINIMAL_SCALAR = """
model = "scalar_relu"

[init]
kind = "explicit"
theta = [10.0, 1e-6]

[optimizer]
beta = 0.9

[optimizer.schedule]
kind = "constant"
eta = 0.03819
"""


class TestParsing:
    def test_minimal_config_defaults_filled(self):
        cfg = parse_config(MINIMAL_SCALAR)
        assert cfg.model == "scalar_relu"
        assert cfg.run.steps == 100_000
        assert cfg.run.probe_tol == 1e-8
        assert cfg.detector.kappa == 5.0
        assert cfg.detector.rho == 0.2

    def test_json_accepted(self):
        cfg = parse_config(json.dumps({"model": "simple2d"}))
        assert cfg.model == "simple2d"

    def test_unknown_key_rejected_with_path(self):
        with pytest.raises(ConfigError, match="optimizer.momentum"):
            parse_config("[optimizer]\nmomentum = 0.9\n")

    def test_beta_range_enforced(self):
        with pytest.raises(ConfigError, match="beta"):
            parse_config("[optimizer]\nbeta = 1.2\n")

    def test_type_mismatch_rejected(self):
        with pytest.raises(ConfigError, match="run.steps"):
            parse_config('[run]\nsteps = "many"\n')

    def test_round_trip_identity(self):
        cfg = parse_config(MINIMAL_SCALAR)
        again = parse_config(json.dumps(cfg.to_dict()))
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)

    def test_hash_changes_with_content(self):
        a = parse_config(MINIMAL_SCALAR)
        b = a.model_copy(deep=True)
        b.run.steps = 5
        assert config_hash(a) != config_hash(b)

    def test_file_input(self, tmp_path):
        path = tmp_path / "cfg.toml"
        path.write_text(MINIMAL_SCALAR)
        assert parse_config(path).model == "scalar_relu"


def _write_cfg(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestCli:
    def test_run_command_outputs(self, tmp_path):
        cfg = _write_cfg(tmp_path, MINIMAL_SCALAR + "\n[run]\nsteps = 4000\n")
        rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 0
        cfg_obj = parse_config(Path(cfg))
        outdir = tmp_path / "o" / "run" / config_hash(cfg_obj)
        assert (outdir / "trajectory.csv").exists()
        assert (outdir / "events.json").exists()
        meta = json.loads((outdir / "meta.json").read_text())
        assert meta["config"]["run"]["steps"] == 4000

    def test_byte_identical_reruns(self, tmp_path):
        cfg = _write_cfg(tmp_path, MINIMAL_SCALAR + "\n[run]\nsteps = 2000\n")
        rc1 = main(["run", "--config", cfg, "--out", str(tmp_path / "a")])
        rc2 = main(["run", "--config", cfg, "--out", str(tmp_path / "b")])
        assert rc1 == rc2 == 0
        cfg_obj = parse_config(Path(cfg))
        h = config_hash(cfg_obj)
        csv_a = (tmp_path / "a" / "run" / h / "trajectory.csv").read_bytes()
        csv_b = (tmp_path / "b" / "run" / h / "trajectory.csv").read_bytes()
        assert csv_a == csv_b

    def test_config_error_exit_code(self, tmp_path):
        cfg = _write_cfg(tmp_path, "[optimizer]\nbeta = 7.0\n")
        assert main(["run", "--config", cfg]) == 1

    def test_missing_config_file(self):
        assert main(["run", "--config", "/nonexistent/cfg.toml"]) == 1

    def test_scenarios_command(self, tmp_path):
        text = MINIMAL_SCALAR + "\n[run]\nsteps = 30000\n"
        cfg = _write_cfg(tmp_path, text)
        rc = main(["scenarios", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 0
        cfg_obj = parse_config(Path(cfg))
        outdir = tmp_path / "o" / "scenarios" / config_hash(cfg_obj)
        for name in ("gd", "phb", "gd_to_phb", "phb_to_gd"):
            assert (outdir / f"trajectory_{name}.csv").exists()
        table = (outdir / "delta_s.csv").read_text().splitlines()
        assert table[0] == "scenario,s0,s_final,delta_s,ratio_to_gd"
        assert len(table) == 5

    def test_beta_sweep_command(self, tmp_path):
        text = MINIMAL_SCALAR + "\n[beta_sweep]\nbetas = [0.0, 0.5, 0.9]\nsteps = 20000\n"
        cfg = _write_cfg(tmp_path, text)
        rc = main(["beta-sweep", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 0
        cfg_obj = parse_config(Path(cfg))
        outdir = tmp_path / "o" / "beta-sweep" / config_hash(cfg_obj)
        lines = (outdir / "beta_sweep.csv").read_text().splitlines()
        assert len(lines) == 4

    def test_sweep_command_one_cell(self, tmp_path):
        text = """
model = "ldn"

[sweep]
alphas = [0.22]
eta_fs = [0.0035]
"""
        cfg = _write_cfg(tmp_path, text)
        rc = main(["sweep", "--config", cfg, "--out", str(tmp_path / "o")])
        assert rc == 0
        cfg_obj = parse_config(Path(cfg))
        outdir = tmp_path / "o" / "sweep" / config_hash(cfg_obj)
        for tag in ("gd", "phb"):
            lines = (outdir / f"sweep_{tag}.csv").read_text().splitlines()
            assert lines[0] == "alpha,eta_f,test_loss,train_loss,sharpness,mss,diverged,catapults"
            assert len(lines) == 2
        baselines = json.loads((outdir / "baselines.json").read_text())
        assert baselines["l2_test_loss"] > 0

    def test_trajectory_csv_loads_back(self, tmp_path):
        cfg = _write_cfg(tmp_path, MINIMAL_SCALAR + "\n[run]\nsteps = 1000\n")
        main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
        cfg_obj = parse_config(Path(cfg))
        outdir = tmp_path / "o" / "run" / config_hash(cfg_obj)
        traj = Trajectory.from_csv(outdir / "trajectory.csv")
        assert len(traj) == 1001
        assert np.all(np.isfinite(traj.loss))
