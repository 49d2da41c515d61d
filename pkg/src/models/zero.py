"""A predictor that is identically zero and ignores its parameters."""
from typing import Optional

import numpy as np

from diffusion.schedule import VpSchedule
from .base import NoisePredictionModel, VjpBundle


class ZeroModel(NoisePredictionModel):
    """
    eps(x, z, t) = 0 for every theta.

    All three VJPs vanish, so the sampler and the adjoint reduce to their
    linear alpha-ratio transport. theta is carried only so the parameter
    channel has a shape.
    """

    def __init__(self, schedule: VpSchedule, d: int, dim_z: int, theta: Optional[np.ndarray] = None):
        super().__init__(schedule, dim_x=d, dim_z=dim_z)
        theta = np.zeros(1) if theta is None else np.array(theta, dtype=np.float64)
        theta.setflags(write=False)
        self._theta = theta

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    def with_theta(self, theta) -> "ZeroModel":
        theta = self._check_theta(theta)
        return ZeroModel(self.schedule, self.dim_x, self.dim_z, theta=theta)

    def _eps(self, x, z, t):
        return np.zeros(self.dim_x)

    def _vjp(self, a, x, z, t):
        return VjpBundle(np.zeros(self.dim_x), np.zeros(self.dim_z), np.zeros(self.dim_theta))

    def to_dict(self) -> dict:
        return {"type": "zero", "d": self.dim_x, "dim_z": self.dim_z}
