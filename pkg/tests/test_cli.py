"""Run config validation and the subcommands end to end."""
import json

import numpy as np
import pandas as pd
import pytest

from adjoint.solver import solve_adjoint
from config import CONFIGS_DIR
from diffusion.schedule import VpSchedule
from main import main
from pipelines.commands import build_setup, compute_gradients
from pipelines.run_config import load_run_config, parse_run_config
from samplers.trajectory import Trajectory
from utils.errors import ConfigError


def _write(tmp_path, config, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


def _run(tmp_path, command, config, *extra):
    out = tmp_path / "out"
    code = main([command, "--config", str(_write(tmp_path, config)), "--out", str(out), *extra])
    return code, out


MINIMAL = {"model": {"type": "gaussian", "d": 2, "mu": [0.5, -0.5], "c": 1.5}, "grid": {"n_steps": 5}}


class TestRunConfig:
    def test_defaults(self):
        cfg = parse_run_config({"grid": {"n_steps": 4}})
        assert cfg.adjoint.order == 1
        assert cfg.optimize.learning_rate == 0.01
        assert cfg.optimize.n_opt_steps == 50

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_run_config({"grid": {"n_steps": 4}, "extra": 1})
        with pytest.raises(ConfigError):
            parse_run_config({"grid": {"n_steps": 4, "foo": 2}})

    def test_grid_needs_one_source(self):
        with pytest.raises(ConfigError):
            parse_run_config({"grid": {}})
        with pytest.raises(ConfigError):
            parse_run_config({"grid": {"n_steps": 4, "times": [0.1, 1.0]}})

    def test_overrides(self, tmp_path):
        cfg = parse_run_config({"grid": {"n_steps": 4}, "seed": 1}, seed=7, out=str(tmp_path))
        assert cfg.seed == 7
        assert cfg.output_dir == tmp_path

    def test_resimulate_requires_ode(self):
        with pytest.raises(ConfigError):
            parse_run_config({"grid": {"n_steps": 4}, "adjoint": {"kind": "sde", "state_source": "resimulate"}})

    @pytest.mark.parametrize("path", sorted(CONFIGS_DIR.glob("*.json")), ids=lambda p: p.stem)
    def test_shipped_configs_parse(self, path):
        cfg = load_run_config(path)
        schedule, model, grid = build_setup(cfg)
        assert grid.t_stop == 1.0
        cfg.loss.build(model.dim_x)


class TestSample:
    def test_writes_trajectory(self, tmp_path):
        code, out = _run(tmp_path, "sample", MINIMAL)
        assert code == 0
        traj = Trajectory.load(out / "trajectory.json")
        assert traj.states.shape == (6, 2)

    def test_writes_run_log(self, tmp_path):
        _, out = _run(tmp_path, "sample", MINIMAL)
        log = (out / "run.log").read_text()
        assert "sample" in log
        assert "Sampled ode trajectory" in log

    def test_same_seed_same_bytes(self, tmp_path):
        _, out = _run(tmp_path, "sample", MINIMAL, "--seed", "3")
        first = (out / "trajectory.json").read_bytes()
        _, out = _run(tmp_path, "sample", MINIMAL, "--seed", "3")
        assert (out / "trajectory.json").read_bytes() == first

    def test_sde_carries_noise(self, tmp_path):
        config = dict(MINIMAL, adjoint={"kind": "sde"})
        _, out = _run(tmp_path, "sample", config)
        data = json.loads((out / "trajectory.json").read_text())
        assert len(data["noise_seq"]) == 5

    def test_bad_config_exit_code(self, tmp_path):
        code, _ = _run(tmp_path, "sample", {"grid": {"n_steps": 5}, "bogus": True})
        assert code == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["sample", "--config", str(tmp_path / "missing.json")]) == 2


class TestGrad:
    def test_zero_loss_gives_zero_gradients(self, tmp_path):
        code, out = _run(tmp_path, "grad", MINIMAL)
        assert code == 0
        data = json.loads((out / "gradients.json").read_text())
        assert np.all(np.asarray(data["a_x"]) == 0.0)
        assert np.all(np.asarray(data["a_theta"]) == 0.0)

    def test_zero_model_transports_loss_gradient(self, tmp_path):
        config = {"model": {"type": "zero", "d": 2}, "grid": {"n_steps": 8},
                  "loss": {"type": "linear", "weights": [0.3, -0.7]}}
        code, out = _run(tmp_path, "grad", config)
        assert code == 0
        data = json.loads((out / "gradients.json").read_text())
        schedule = VpSchedule()
        ratio = np.exp(schedule.log_alpha(schedule.t_eps) - schedule.log_alpha(1.0))
        np.testing.assert_allclose(data["a_x"], ratio * np.array([0.3, -0.7]), rtol=1e-13)
        assert np.all(np.asarray(data["a_z"]) == 0.0)
        assert np.all(np.asarray(data["a_theta"]) == 0.0)

    def test_decoupled_grids_differ(self, tmp_path):
        base = dict(MINIMAL, grid={"n_steps": 16}, loss={"type": "target", "target": [1.0, 1.0]})
        _, out = _run(tmp_path, "grad", base)
        full = json.loads((out / "gradients.json").read_text())
        _, out = _run(tmp_path, "grad", dict(base, adjoint={"M": 8}))
        half = json.loads((out / "gradients.json").read_text())
        assert full["a_x"] != half["a_x"]
        assert len(half["lambda_steps"]) == 8

    def test_matches_library_call(self, tmp_path):
        config = dict(MINIMAL, loss={"type": "linear", "weights": [1.0, -1.0]}, adjoint={"order": 2})
        _, out = _run(tmp_path, "sample", config)
        traj_path = out / "trajectory.json"
        code, _ = _run(tmp_path, "grad", config, "--trajectory", str(traj_path))
        assert code == 0
        written = json.loads((out / "gradients.json").read_text())

        cfg = parse_run_config(config)
        schedule, model, _ = build_setup(cfg)
        traj = Trajectory.load(traj_path)
        direct = solve_adjoint(traj, [1.0, -1.0], traj.grid, model, schedule, order=2)
        assert written["a_x"] == direct.grad_x.tolist()
        assert written["a_z"] == direct.grad_z.tolist()
        assert compute_gradients(cfg, traj_path).grad_theta.tolist() == written["a_theta"]

    def test_kind_mismatch(self, tmp_path):
        _, out = _run(tmp_path, "sample", MINIMAL)
        config = dict(MINIMAL, adjoint={"kind": "sde"})
        code, _ = _run(tmp_path, "grad", config, "--trajectory", str(out / "trajectory.json"))
        assert code == 2


class TestConvergence:
    def test_csv_and_fits(self, tmp_path):
        config = json.loads((CONFIGS_DIR / "convergence.json").read_text())
        code, out = _run(tmp_path, "convergence", config)
        assert code == 0
        df = pd.read_csv(out / "convergence.csv")
        assert list(df.columns) == ["solver", "order", "kind", "M", "h_max", "err_ax", "err_az", "err_atheta"]
        assert df["M"].tolist() == [32, 64, 128, 256, 512] * 2
        fits = json.loads((out / "convergence_fits.json").read_text())
        assert 0.8 <= fits["1"]["max"]["slope"] <= 1.3
        assert 1.7 <= fits["2"]["max"]["slope"] <= 2.4

    def test_too_few_steps(self, tmp_path):
        config = {"grid": {"n_steps": 16}, "convergence": {"steps": [4, 8]}}
        code, _ = _run(tmp_path, "convergence", config)
        assert code == 2


class TestOptimize:
    def _config(self, **optimize):
        return dict(MINIMAL, grid={"n_steps": 32, "spacing": "uniform-in-lambda"},
                    inputs={"x_T": [0.8, 0.3]},
                    loss={"type": "target", "target": [2.0, -1.5]}, optimize=optimize)

    def test_zero_learning_rate(self, tmp_path):
        code, out = _run(tmp_path, "optimize", self._config(learning_rate=0.0, n_opt_steps=4))
        assert code == 0
        history = pd.read_csv(out / "history.csv")
        assert list(history.columns) == ["step", "loss", "grad_norm_x", "grad_norm_z"]
        assert len(history) == 5
        assert history["loss"].nunique() == 1

    def test_loss_decreases_and_is_reproducible(self, tmp_path):
        config = self._config(n_opt_steps=50)
        _, out = _run(tmp_path, "optimize", config)
        first = (out / "history.csv").read_bytes()
        history = pd.read_csv(out / "history.csv")
        assert history["loss"].iloc[-1] < history["loss"].iloc[0]
        _, out = _run(tmp_path, "optimize", config)
        assert (out / "history.csv").read_bytes() == first

    def test_learning_rate_sweep(self, tmp_path):
        code, out = _run(tmp_path, "optimize", self._config(learning_rates=[0.0, 0.01], n_opt_steps=2))
        assert code == 0
        assert (out / "history_lr0.csv").exists()
        assert (out / "history_lr0.01.csv").exists()
        assert (out / "final_state_lr0.01.json").exists()


class TestCycleCheck:
    @pytest.mark.parametrize("n, d", [(5, 2), (20, 4), (50, 2)])
    def test_reconstruction(self, tmp_path, n, d):
        config = {"model": {"type": "mlp", "d": d}, "grid": {"n_steps": n}}
        code, out = _run(tmp_path, "cycle-check", config)
        assert code == 0
        report = json.loads((out / "cycle_report.json").read_text())
        assert report["max_reconstruction_error"] <= 1e-10
        assert report["passed"] is True

    def test_duplicate_times(self, tmp_path):
        config = {"model": {"type": "mlp", "d": 2}, "grid": {"times": [0.1, 0.5, 0.5, 1.0]}}
        code, _ = _run(tmp_path, "cycle-check", config)
        assert code == 2
