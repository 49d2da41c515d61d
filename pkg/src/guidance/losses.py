"""Guidance losses on the generated sample x_{t_eps}, with exact gradients."""
from abc import ABC, abstractmethod

import numpy as np

from utils.errors import ConfigError
from utils.helpers import as_vector


class GuidanceLoss(ABC):
    """Scalar loss L(x) and its gradient dL/dx."""

    @abstractmethod
    def __call__(self, x) -> float:
        ...

    @abstractmethod
    def grad(self, x) -> np.ndarray:
        ...

    @abstractmethod
    def to_dict(self) -> dict:
        ...


class TargetDistanceLoss(GuidanceLoss):
    """||x - target||^2."""

    def __init__(self, target):
        self.target = as_vector(target, name="target")

    def __call__(self, x) -> float:
        diff = as_vector(x, self.target.shape[0], "x") - self.target
        return float(diff @ diff)

    def grad(self, x) -> np.ndarray:
        return 2.0 * (as_vector(x, self.target.shape[0], "x") - self.target)

    def to_dict(self) -> dict:
        return {"type": "target", "target": self.target.tolist()}


class SymmetricPairLoss(GuidanceLoss):
    """
    d(x, a) + d(x, b) + |d(x, a) - d(x, b)| with d the squared distance.

    Pulls x toward both targets while penalizing imbalance between them.
    """

    def __init__(self, a, b):
        self.a = as_vector(a, name="a")
        self.b = as_vector(b, self.a.shape[0], "b")

    def _distances(self, x):
        x = as_vector(x, self.a.shape[0], "x")
        return x, float((x - self.a) @ (x - self.a)), float((x - self.b) @ (x - self.b))

    def __call__(self, x) -> float:
        _, d_a, d_b = self._distances(x)
        return d_a + d_b + abs(d_a - d_b)

    def grad(self, x) -> np.ndarray:
        x, d_a, d_b = self._distances(x)
        g_a, g_b = 2.0 * (x - self.a), 2.0 * (x - self.b)
        return g_a + g_b + np.sign(d_a - d_b) * (g_a - g_b)

    def to_dict(self) -> dict:
        return {"type": "symmetric", "a": self.a.tolist(), "b": self.b.tolist()}


class LinearLoss(GuidanceLoss):
    """w . x, whose gradient is the fixed vector w."""

    def __init__(self, weights):
        self.weights = as_vector(weights, name="weights")

    def __call__(self, x) -> float:
        return float(self.weights @ as_vector(x, self.weights.shape[0], "x"))

    def grad(self, x) -> np.ndarray:
        as_vector(x, self.weights.shape[0], "x")
        return self.weights.copy()

    def to_dict(self) -> dict:
        return {"type": "linear", "weights": self.weights.tolist()}


class ZeroLoss(GuidanceLoss):
    def __init__(self, dim: int):
        self.dim = int(dim)

    def __call__(self, x) -> float:
        as_vector(x, self.dim, "x")
        return 0.0

    def grad(self, x) -> np.ndarray:
        as_vector(x, self.dim, "x")
        return np.zeros(self.dim)

    def to_dict(self) -> dict:
        return {"type": "zero"}


def build_loss(options: dict, dim: int) -> GuidanceLoss:
    """Loss from its config dict, e.g. {"type": "target", "target": [1.0, 2.0]}."""
    kind = options.get("type")
    try:
        if kind == "target":
            loss = TargetDistanceLoss(options["target"])
        elif kind == "symmetric":
            loss = SymmetricPairLoss(options["a"], options["b"])
        elif kind == "linear":
            loss = LinearLoss(options["weights"])
        elif kind == "zero":
            return ZeroLoss(dim)
        else:
            raise ConfigError(f"Unknown loss type {kind!r}")
        # dimension mismatch raises here
        loss.grad(np.zeros(dim))
    except KeyError as e:
        raise ConfigError(f"Loss {kind!r} is missing field {e}") from e
    except (ValueError, TypeError) as e:
        raise ConfigError(f"Invalid {kind!r} loss for dimension {dim}: {e}") from e
    return loss
