"""Guidance losses and guided generation."""
import numpy as np
import pytest

from diffusion.grid import Spacing, make_grid
from guidance.losses import LinearLoss, SymmetricPairLoss, TargetDistanceLoss, ZeroLoss, build_loss
from guidance.optimizer import OptimizeConfig, guided_generate
from models import AnalyticGaussianModel
from oracles.finite_diff import finite_diff_grad
from samplers.sampler import sample
from samplers.trajectory import Kind
from utils.errors import ConfigError
from utils.helpers import relative_error


class TestLosses:
    @pytest.mark.parametrize("loss", [
        TargetDistanceLoss([1.0, -2.0]),
        SymmetricPairLoss([1.0, 0.0], [0.0, 3.0]),
        LinearLoss([0.5, -1.5]),
    ])
    def test_gradient_matches_finite_difference(self, loss):
        x = np.array([0.3, 0.9])
        assert relative_error(loss.grad(x), finite_diff_grad(loss, x)) <= 1e-6

    def test_target_distance_value(self):
        assert TargetDistanceLoss([1.0, 1.0])([2.0, 3.0]) == 5.0

    def test_symmetric_is_twice_the_larger_distance(self):
        loss = SymmetricPairLoss([0.0, 0.0], [2.0, 0.0])
        # d_a = 1, d_b = 9
        assert loss([-1.0, 0.0]) == pytest.approx(18.0)

    def test_zero_loss(self):
        loss = ZeroLoss(3)
        assert loss([1.0, 2.0, 3.0]) == 0.0
        np.testing.assert_array_equal(loss.grad([1.0, 2.0, 3.0]), 0.0)

    def test_build_from_spec(self):
        loss = build_loss({"type": "target", "target": [1.0, 2.0]}, dim=2)
        assert isinstance(loss, TargetDistanceLoss)
        assert loss.to_dict() == {"type": "target", "target": [1.0, 2.0]}

    @pytest.mark.parametrize("options", [
        {"type": "nope"},
        {"type": "target"},
        {"type": "target", "target": [1.0, 2.0, 3.0]},
        {"type": "symmetric", "a": [1.0, 2.0], "b": [1.0]},
    ])
    def test_bad_options(self, options):
        with pytest.raises(ConfigError):
            build_loss(options, dim=2)


@pytest.fixture
def problem(schedule):
    model = AnalyticGaussianModel(schedule, mu=[0.5, -0.5], c=1.0)
    grid = make_grid(schedule, 64, Spacing.UNIFORM_LAMBDA)
    return model, grid, np.array([0.8, 0.3])


class TestGuidedGenerate:
    def test_zero_learning_rate(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(learning_rate=0.0, n_opt_steps=3)
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([1.0, 1.0]), cfg)
        np.testing.assert_array_equal(result.x_T, x_T)
        np.testing.assert_array_equal(result.z, model.mu)
        assert result.history["loss"].nunique() == 1
        assert len(result.history) == 4

    def test_at_minimum_no_drift(self, schedule, problem):
        model, grid, x_T = problem
        target = sample(model, schedule, grid, x_T, model.mu).x_final
        cfg = OptimizeConfig(n_opt_steps=5)
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss(target), cfg)
        assert np.linalg.norm(result.x_T - x_T) <= 1e-6

    def test_loss_decreases(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(learning_rate=0.01, n_opt_steps=50)
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([2.0, -1.5]), cfg)
        losses = result.history["loss"].to_numpy()
        assert len(losses) == 51
        assert losses[-1] < 0.1 * losses[0]
        assert np.all(np.diff(losses) <= 1e-8)

    def test_ode_deterministic(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(n_opt_steps=5)
        loss = SymmetricPairLoss([1.0, 0.0], [0.0, 1.0])
        a = guided_generate(model, schedule, grid, x_T, model.mu, loss, cfg, seed=1)
        b = guided_generate(model, schedule, grid, x_T, model.mu, loss, cfg, seed=2)
        np.testing.assert_array_equal(a.history.to_numpy(), b.history.to_numpy())

    def test_update_set_isolation(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(n_opt_steps=3, update_set=["x_T"])
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([2.0, 0.0]), cfg)
        np.testing.assert_array_equal(result.z, model.mu)
        assert not np.array_equal(result.x_T, x_T)

    def test_theta_update(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(n_opt_steps=2, update_set=["theta"])
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([2.0, 0.0]), cfg)
        assert result.theta[0] != model.c
        np.testing.assert_array_equal(result.x_T, x_T)

    def test_sde_reuses_one_realization(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(learning_rate=0.0, n_opt_steps=3, kind=Kind.SDE)
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([1.0, 1.0]), cfg, seed=9)
        assert result.history["loss"].nunique() == 1

    def test_decoupled_adjoint_grid(self, schedule, problem):
        model, grid, x_T = problem
        cfg = OptimizeConfig(n_opt_steps=3, n_adjoint_steps=16, adjoint_spacing=Spacing.UNIFORM_LAMBDA, order=2)
        result = guided_generate(model, schedule, grid, x_T, model.mu, TargetDistanceLoss([2.0, 0.0]), cfg)
        assert result.history["loss"].iloc[-1] < result.history["loss"].iloc[0]

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizeConfig(learning_rate=-1.0)
        with pytest.raises(ValueError):
            OptimizeConfig(n_opt_steps=0)
        with pytest.raises(ValueError):
            OptimizeConfig(update_set=["w"])
