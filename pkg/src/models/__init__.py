from .base import NoisePredictionModel, VjpBundle
from .gaussian import AnalyticGaussianModel
from .mlp import TinyMlpModel
from .zero import ZeroModel

__all__ = ["NoisePredictionModel", "VjpBundle", "AnalyticGaussianModel", "TinyMlpModel", "ZeroModel"]
