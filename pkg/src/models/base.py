"""Noise-prediction model interface and the VJP bundle it returns."""
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from diffusion.schedule import VpSchedule
from utils.errors import ContractError, DomainError
from utils.helpers import as_vector


@dataclass(frozen=True)
class VjpBundle:
    """Unscaled products a^T d eps/dx, a^T d eps/dz, a^T d eps/dtheta."""

    vjp_x: np.ndarray
    vjp_z: np.ndarray
    vjp_theta: np.ndarray

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.vjp_x))
            and np.all(np.isfinite(self.vjp_z))
            and np.all(np.isfinite(self.vjp_theta))
        )


class NoisePredictionModel(ABC):
    """
    eps_theta(x, z, t) with exact reverse-mode products.

    Models are immutable; parameter updates go through with_theta, which
    returns a new instance.
    """

    # t may sit this far below t_eps (grid roundoff) and still be accepted
    _T_SLACK = 1e-12

    def __init__(self, schedule: VpSchedule, dim_x: int, dim_z: int):
        self.schedule = schedule
        self.dim_x = int(dim_x)
        self.dim_z = int(dim_z)

    @property
    @abstractmethod
    def theta(self) -> np.ndarray:
        """Flattened parameter vector."""

    @property
    def dim_theta(self) -> int:
        return int(self.theta.shape[0])

    @abstractmethod
    def with_theta(self, theta) -> "NoisePredictionModel":
        """Copy of the model carrying a new parameter vector."""

    @abstractmethod
    def _eps(self, x: np.ndarray, z: np.ndarray, t: float) -> np.ndarray:
        ...

    @abstractmethod
    def _vjp(self, a: np.ndarray, x: np.ndarray, z: np.ndarray, t: float) -> VjpBundle:
        ...

    def eps(self, x, z, t: float) -> np.ndarray:
        x, z, t = self._check_inputs(x, z, t)
        return self._eps(x, z, t)

    def vjp(self, a, x, z, t: float) -> VjpBundle:
        a = as_vector(a, self.dim_x, "cotangent")
        x, z, t = self._check_inputs(x, z, t)
        return self._vjp(a, x, z, t)

    def _check_inputs(self, x, z, t):
        x = as_vector(x, self.dim_x, "x")
        z = as_vector(z, self.dim_z, "z")
        t = float(t)
        if not (self.schedule.t_eps - self._T_SLACK <= t <= self.schedule.t_end):
            raise DomainError(f"Model evaluated at t={t}, outside [{self.schedule.t_eps}, 1]")
        return x, z, t

    def _check_theta(self, theta) -> np.ndarray:
        theta = as_vector(theta, name="theta")
        if theta.shape[0] != self.dim_theta:
            raise ContractError(f"theta must have length {self.dim_theta}, got {theta.shape[0]}")
        return theta
