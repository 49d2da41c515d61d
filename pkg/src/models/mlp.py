"""One-hidden-layer tanh network standing in for a trained eps_theta."""
import json
from pathlib import Path
from typing import Optional

import numpy as np

from config import MLP_HIDDEN, MLP_INIT_SCALE
from diffusion.schedule import VpSchedule
from utils.errors import ConfigError
from utils.logger import logger
from .base import NoisePredictionModel, VjpBundle


class TinyMlpModel(NoisePredictionModel):
    """
    eps(x, z, t) = W2 tanh(W1 [x; z; tau] + b1) + b2

    tau is lambda_t rescaled to [-1, 1] over [lambda(1), lambda(t_eps)].
    theta is the flat concatenation W1, b1, W2, b2 (row-major).
    """

    def __init__(self, schedule: VpSchedule, d: int, dim_z: int, hidden: int = MLP_HIDDEN,
                 theta: Optional[np.ndarray] = None, seed: int = 0, init_scale: float = MLP_INIT_SCALE):
        super().__init__(schedule, dim_x=d, dim_z=dim_z)
        self.hidden = int(hidden)
        self.n_in = self.dim_x + self.dim_z + 1
        self._shapes = [
            (self.hidden, self.n_in),
            (self.hidden,),
            (self.dim_x, self.hidden),
            (self.dim_x,),
        ]
        self._sizes = [int(np.prod(s)) for s in self._shapes]
        self._lam_lo = schedule.lambda_min
        self._lam_hi = schedule.lambda_max

        if theta is None:
            theta = self._init_theta(seed, init_scale)
        else:
            theta = np.array(theta, dtype=np.float64)
            if theta.shape != (sum(self._sizes),):
                raise ConfigError(f"MLP needs {sum(self._sizes)} parameters, got {theta.shape}")
        theta.setflags(write=False)
        self._theta = theta
        self.W1, self.b1, self.W2, self.b2 = self._unflatten(theta)

    @classmethod
    def zeros(cls, schedule: VpSchedule, d: int, dim_z: int, hidden: int = MLP_HIDDEN) -> "TinyMlpModel":
        """A network that is identically zero (eps == 0)."""
        size = hidden * (d + dim_z + 1) + hidden + d * hidden + d
        return cls(schedule, d, dim_z, hidden, theta=np.zeros(size))

    def _init_theta(self, seed: int, init_scale: float) -> np.ndarray:
        rng = np.random.default_rng(seed)
        W1 = rng.normal(size=self._shapes[0]) / np.sqrt(self.n_in)
        b1 = 0.1 * rng.normal(size=self._shapes[1])
        W2 = init_scale * rng.normal(size=self._shapes[2]) / np.sqrt(self.hidden)
        b2 = 0.1 * init_scale * rng.normal(size=self._shapes[3])
        return np.concatenate([W1.ravel(), b1, W2.ravel(), b2])

    def _unflatten(self, theta: np.ndarray):
        parts, offset = [], 0
        for shape, size in zip(self._shapes, self._sizes):
            parts.append(theta[offset:offset + size].reshape(shape))
            offset += size
        return parts

    @property
    def theta(self) -> np.ndarray:
        return self._theta

    def with_theta(self, theta) -> "TinyMlpModel":
        theta = self._check_theta(theta)
        return TinyMlpModel(self.schedule, self.dim_x, self.dim_z, self.hidden, theta=theta)

    def time_feature(self, t: float) -> float:
        lam = float(self.schedule.lambda_(t))
        return 2.0 * (lam - self._lam_lo) / (self._lam_hi - self._lam_lo) - 1.0

    def _forward(self, x, z, t):
        u = np.concatenate([x, z, [self.time_feature(t)]])
        pre = self.W1 @ u + self.b1
        hid = np.tanh(pre)
        out = self.W2 @ hid + self.b2
        return u, hid, out

    def _eps(self, x, z, t):
        return self._forward(x, z, t)[2]

    def _vjp(self, a, x, z, t):
        u, hid, _ = self._forward(x, z, t)
        # output layer
        dW2 = np.outer(a, hid)
        db2 = a
        dhid = self.W2.T @ a
        # tanh
        dpre = dhid * (1.0 - hid ** 2)
        # input layer
        dW1 = np.outer(dpre, u)
        db1 = dpre
        du = self.W1.T @ dpre

        vjp_theta = np.concatenate([dW1.ravel(), db1, dW2.ravel(), db2])
        return VjpBundle(du[:self.dim_x], du[self.dim_x:self.dim_x + self.dim_z], vjp_theta)

    def save_weights(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self._theta.tolist(), f)
        logger.info(f"Saved MLP weights ({self.dim_theta} values) to {path}")
        return path

    @classmethod
    def load_weights(cls, path: Path, schedule: VpSchedule, d: int, dim_z: int,
                     hidden: int = MLP_HIDDEN) -> "TinyMlpModel":
        try:
            with open(path, "r", encoding="utf-8") as f:
                theta = np.asarray(json.load(f), dtype=np.float64)
        except (OSError, ValueError) as e:
            raise ConfigError(f"Cannot load MLP weights from {path}: {e}") from e
        return cls(schedule, d, dim_z, hidden, theta=theta)

    def to_dict(self) -> dict:
        return {"type": "mlp", "d": self.dim_x, "dim_z": self.dim_z, "hidden": self.hidden}
