"""Noise-prediction models and their vector-Jacobian products."""
import numpy as np
import pytest

from diffusion.grid import Spacing, make_grid
from models import AnalyticGaussianModel, TinyMlpModel
from oracles.exact import exact_flow
from oracles.finite_diff import finite_diff_grad
from samplers.sampler import sample
from utils.errors import ConfigError, ContractError, DomainError


class TestAnalyticGaussian:
    def test_centered_input(self, schedule, gaussian):
        t = 0.4
        x = schedule.alpha(t) * gaussian.mu
        np.testing.assert_allclose(gaussian.eps(x, gaussian.mu, t), 0.0, atol=1e-15)

    def test_standard_normal_data(self, schedule):
        model = AnalyticGaussianModel(schedule, mu=[0.0], c=1.0)
        for t in (0.01, 0.3, 0.9):
            assert model.eps([1.0], [0.0], t)[0] == pytest.approx(schedule.sigma(t), rel=1e-12)

    def test_vjp_x_is_scalar(self, schedule, gaussian):
        t, a = 0.6, np.array([0.3, -2.0])
        var = schedule.alpha(t) ** 2 * 1.5 ** 2 + schedule.sigma_sq(t)
        bundle = gaussian.vjp(a, [0.1, 0.2], gaussian.mu, t)
        np.testing.assert_allclose(bundle.vjp_x, schedule.sigma(t) / var * a, rtol=1e-14)

    def test_vjp_matches_finite_difference(self, gaussian):
        t, a = 0.35, np.array([0.7, -0.4])
        x, z = np.array([0.3, 1.1]), np.array([0.2, -0.5])
        bundle = gaussian.vjp(a, x, z, t)

        np.testing.assert_allclose(bundle.vjp_x, finite_diff_grad(lambda v: a @ gaussian.eps(v, z, t), x), rtol=1e-7)
        np.testing.assert_allclose(bundle.vjp_z, finite_diff_grad(lambda v: a @ gaussian.eps(x, v, t), z), rtol=1e-7)
        fd_theta = finite_diff_grad(lambda c: a @ gaussian.with_theta(c).eps(x, z, t), gaussian.theta)
        np.testing.assert_allclose(bundle.vjp_theta, fd_theta, rtol=1e-6)

    def test_nonpositive_scale(self, schedule):
        with pytest.raises(ContractError):
            AnalyticGaussianModel(schedule, mu=[0.0], c=0.0)

    def test_with_theta_is_a_copy(self, gaussian):
        other = gaussian.with_theta([2.0])
        assert other.c == 2.0
        assert gaussian.c == 1.5

    def test_probability_flow_mean_approaches_mu(self, schedule):
        model = AnalyticGaussianModel(schedule, mu=[0.5, -1.0], c=1.0)
        draws = np.random.default_rng(0).standard_normal((200, 2))
        exact_mean = np.mean([exact_flow(model, schedule, x, schedule.t_eps) for x in draws], axis=0)
        gaps, means = [], []
        for n in (8, 32, 128):
            grid = make_grid(schedule, n, Spacing.UNIFORM_LAMBDA)
            finals = [sample(model, schedule, grid, x, model.mu, record_eps=False).x_final for x in draws]
            means.append(np.mean(finals, axis=0))
            gaps.append(np.linalg.norm(means[-1] - exact_mean))

        assert gaps[0] > gaps[1] > gaps[2]
        # 200 draws leave a Monte Carlo spread of about 0.1
        assert np.linalg.norm(means[-1] - model.mu) <= 0.3

    @pytest.mark.parametrize("model_name", ["gaussian", "mlp"])
    def test_vjp_is_linear_in_cotangent(self, request, model_name):
        model = request.getfixturevalue(model_name)
        a, b = np.array([0.7, -0.4]), np.array([-1.2, 0.3])
        x, z, t = np.array([0.3, 1.1]), np.array([0.2, -0.5]), 0.45
        combined = model.vjp(2.0 * a - 3.0 * b, x, z, t)
        va, vb = model.vjp(a, x, z, t), model.vjp(b, x, z, t)
        for name in ("vjp_x", "vjp_z", "vjp_theta"):
            expected = 2.0 * getattr(va, name) - 3.0 * getattr(vb, name)
            np.testing.assert_allclose(getattr(combined, name), expected, rtol=1e-12, atol=1e-14)


class TestTinyMlp:
    def test_zero_network(self, zero_mlp):
        np.testing.assert_array_equal(zero_mlp.eps([0.3, -0.2], [1.0, 1.0], 0.5), 0.0)

    def test_zero_cotangent(self, mlp):
        bundle = mlp.vjp([0.0, 0.0], [0.3, -0.2], [1.0, 0.5], 0.5)
        for part in (bundle.vjp_x, bundle.vjp_z, bundle.vjp_theta):
            np.testing.assert_array_equal(part, 0.0)

    @pytest.mark.parametrize("seed", range(100))
    def test_vjp_matches_finite_difference(self, schedule, seed):
        rng = np.random.default_rng(seed)
        model = TinyMlpModel(schedule, d=3, dim_z=2, seed=seed)
        a, x, z = rng.normal(size=3), rng.normal(size=3), rng.normal(size=2)
        t = float(rng.uniform(0.05, 0.95))
        bundle = model.vjp(a, x, z, t)

        fd_x = finite_diff_grad(lambda v: a @ model.eps(v, z, t), x)
        fd_z = finite_diff_grad(lambda v: a @ model.eps(x, v, t), z)
        fd_theta = finite_diff_grad(lambda th: a @ model.with_theta(th).eps(x, z, t), model.theta)
        np.testing.assert_allclose(bundle.vjp_x, fd_x, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(bundle.vjp_z, fd_z, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(bundle.vjp_theta, fd_theta, rtol=1e-5, atol=1e-8)

    def test_parameter_count(self, mlp):
        assert mlp.dim_theta == 8 * 5 + 8 + 2 * 8 + 2

    def test_theta_is_immutable(self, mlp):
        with pytest.raises(ValueError):
            mlp.theta[0] = 1.0

    def test_wrong_theta_length(self, mlp):
        with pytest.raises(ContractError):
            mlp.with_theta(np.zeros(3))

    def test_weights_round_trip(self, mlp, schedule, tmp_path):
        path = mlp.save_weights(tmp_path / "w.json")
        loaded = TinyMlpModel.load_weights(path, schedule, d=2, dim_z=2)
        np.testing.assert_array_equal(loaded.theta, mlp.theta)

    def test_missing_weights_file(self, schedule, tmp_path):
        with pytest.raises(ConfigError):
            TinyMlpModel.load_weights(tmp_path / "nope.json", schedule, d=2, dim_z=2)


class TestInputChecks:
    def test_time_below_t_eps(self, gaussian):
        with pytest.raises(DomainError):
            gaussian.eps([0.0, 0.0], gaussian.mu, 1e-5)

    def test_wrong_dimension(self, gaussian):
        with pytest.raises(ContractError):
            gaussian.eps([0.0, 0.0, 0.0], gaussian.mu, 0.5)


class TestZeroModel:
    def test_all_products_vanish(self, zero_model, rng):
        for _ in range(10):
            a, x, z = rng.normal(size=2), rng.normal(size=2), rng.normal(size=2)
            t = float(rng.uniform(0.01, 1.0))
            np.testing.assert_array_equal(zero_model.eps(x, z, t), 0.0)
            bundle = zero_model.vjp(a, x, z, t)
            for part in (bundle.vjp_x, bundle.vjp_z, bundle.vjp_theta):
                np.testing.assert_array_equal(part, 0.0)

    def test_ignores_theta(self, zero_model):
        other = zero_model.with_theta([3.0])
        np.testing.assert_array_equal(other.eps([0.3, -0.2], [1.0, 1.0], 0.5), 0.0)
        assert other.theta[0] == 3.0

    def test_zero_weight_mlp_still_depends_on_output_bias(self, zero_mlp):
        a = np.array([0.7, -0.4])
        bundle = zero_mlp.vjp(a, [0.3, -0.2], [1.0, 1.0], 0.5)
        np.testing.assert_array_equal(bundle.vjp_theta[-2:], a)
        np.testing.assert_array_equal(bundle.vjp_theta[:-2], 0.0)
