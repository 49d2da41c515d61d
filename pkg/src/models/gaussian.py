"""Exact noise predictor for Gaussian data N(mu, c^2 I)."""
import numpy as np

from diffusion.schedule import VpSchedule
from utils.errors import ContractError
from utils.helpers import as_vector
from .base import NoisePredictionModel, VjpBundle


class AnalyticGaussianModel(NoisePredictionModel):
    """
    eps(x, mu, t) = sigma_t (x - alpha_t mu) / (alpha_t^2 c^2 + sigma_t^2).

    mu is passed as the conditioning z and c is the single parameter theta,
    so all three adjoint channels have closed-form references.
    """

    def __init__(self, schedule: VpSchedule, mu, c: float = 1.0):
        mu = as_vector(mu, name="mu")
        super().__init__(schedule, dim_x=mu.shape[0], dim_z=mu.shape[0])
        if not c > 0:
            raise ContractError(f"Data scale c must be positive, got {c}")
        self.mu = mu
        self.c = float(c)

    @property
    def theta(self) -> np.ndarray:
        return np.array([self.c])

    def with_theta(self, theta) -> "AnalyticGaussianModel":
        theta = self._check_theta(theta)
        return AnalyticGaussianModel(self.schedule, self.mu, float(theta[0]))

    def marginal_var(self, t: float) -> float:
        """alpha_t^2 c^2 + sigma_t^2, the per-coordinate variance of x_t."""
        alpha = float(self.schedule.alpha(t))
        return alpha ** 2 * self.c ** 2 + float(self.schedule.sigma_sq(t))

    def _eps(self, x, z, t):
        alpha = float(self.schedule.alpha(t))
        sigma = float(self.schedule.sigma(t))
        return sigma * (x - alpha * z) / self.marginal_var(t)

    def _vjp(self, a, x, z, t):
        alpha = float(self.schedule.alpha(t))
        sigma = float(self.schedule.sigma(t))
        var = self.marginal_var(t)
        vjp_x = (sigma / var) * a
        vjp_z = (-sigma * alpha / var) * a
        # d/dc [sigma (x - alpha mu) / var] = -2 alpha^2 c sigma (x - alpha mu) / var^2
        dc = -2.0 * alpha ** 2 * self.c * sigma / var ** 2
        vjp_theta = np.array([dc * float(a @ (x - alpha * z))])
        return VjpBundle(vjp_x, vjp_z, vjp_theta)

    def to_dict(self) -> dict:
        return {"type": "gaussian", "d": self.dim_x, "mu": self.mu.tolist(), "c": self.c}
