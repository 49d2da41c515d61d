from .losses import GuidanceLoss, LinearLoss, SymmetricPairLoss, TargetDistanceLoss, ZeroLoss, build_loss
from .optimizer import GuidanceResult, OptimizeConfig, guided_generate

__all__ = [
    "GuidanceLoss",
    "LinearLoss",
    "SymmetricPairLoss",
    "TargetDistanceLoss",
    "ZeroLoss",
    "build_loss",
    "GuidanceResult",
    "OptimizeConfig",
    "guided_generate",
]
