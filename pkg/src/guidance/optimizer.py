"""Guided generation: gradient descent on sampler inputs through the adjoint."""
from dataclasses import dataclass
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from adjoint.solver import solve_adjoint
from adjoint.steps import SecondOrderCoefficient
from config import HISTORY_COLUMNS, LEARNING_RATE, N_OPT_STEPS
from diffusion.grid import Spacing, TimeGrid, make_grid
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from samplers.conditioning import normalize_z
from samplers.sampler import draw_noise, sample
from samplers.trajectory import Kind
from utils.errors import NumericalError
from utils.helpers import as_vector
from utils.logger import logger
from .losses import GuidanceLoss

UpdateTarget = Literal["x_T", "z", "theta"]


class OptimizeConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(default=LEARNING_RATE, ge=0.0)
    n_opt_steps: int = Field(default=N_OPT_STEPS, ge=1)
    update_set: List[UpdateTarget] = Field(default_factory=lambda: ["x_T", "z"])
    order: Literal[1, 2] = 1
    kind: Kind = Kind.ODE
    # adjoint steps; None reuses the sampling grid
    n_adjoint_steps: Optional[int] = Field(default=None, ge=1)
    adjoint_spacing: Spacing = Spacing.UNIFORM_T
    coefficient: SecondOrderCoefficient = SecondOrderCoefficient.EXPM1


@dataclass
class GuidanceResult:
    x_final: np.ndarray
    x_T: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    history: pd.DataFrame

    def to_dict(self) -> dict:
        return {
            "x_final": self.x_final.tolist(),
            "x_T": self.x_T.tolist(),
            "z": self.z.tolist(),
            "theta": self.theta.tolist(),
            "final_loss": float(self.history["loss"].iloc[-1]),
        }


def guided_generate(
    model: NoisePredictionModel,
    schedule: VpSchedule,
    grid: TimeGrid,
    x_T,
    z,
    loss: GuidanceLoss,
    config: OptimizeConfig,
    seed: int = 0,
    adjoint_grid: Optional[TimeGrid] = None,
) -> GuidanceResult:
    """
    v <- v - lr dL/dv for every v in config.update_set, all members updated
    from the same gradient evaluation.

    The SDE kind draws one noise realization from seed and reuses it for
    every optimization step. The history holds n_opt_steps + 1 rows, the
    initial loss included.
    """
    x_T = as_vector(x_T, model.dim_x, "x_T").copy()
    z = normalize_z(z, model.dim_z, grid.n_steps).copy()
    kind = Kind(config.kind)
    noise_seq = draw_noise(seed, grid.n_steps, model.dim_x) if kind == Kind.SDE else None
    if adjoint_grid is None:
        if config.n_adjoint_steps is None:
            adjoint_grid = grid
        else:
            adjoint_grid = make_grid(schedule, config.n_adjoint_steps, config.adjoint_spacing,
                                     t_eps=grid.t_start)

    lr = config.learning_rate
    updates = set(config.update_set)
    logger.info(
        f"Guided generation: {config.n_opt_steps} steps, lr={lr}, kind={kind.value}, "
        f"order={config.order}, updating {sorted(updates)}"
    )

    history = []
    x_final = None
    for step in tqdm(range(config.n_opt_steps + 1), desc="Optimizing"):
        try:
            traj = sample(model, schedule, grid, x_T, z, kind=kind, rng_seed=seed, noise_seq=noise_seq)
            x_final = traj.x_final
            value = float(loss(x_final))
            if not np.isfinite(value):
                raise NumericalError("non-finite loss")
            result = solve_adjoint(traj, loss.grad(x_final), adjoint_grid, model, schedule,
                                   order=config.order, kind=kind, coefficient=config.coefficient)
        except NumericalError as e:
            logger.error(f"Guided generation failed at optimization step {step}: {e}")
            raise NumericalError(f"Optimization step {step}: {e}") from e

        history.append({
            "step": step,
            "loss": value,
            "grad_norm_x": float(np.linalg.norm(result.grad_x)),
            "grad_norm_z": float(np.linalg.norm(result.grad_z)),
        })
        if step == config.n_opt_steps:
            break

        if "x_T" in updates:
            x_T = x_T - lr * result.grad_x
        if "z" in updates:
            z = z - lr * result.grad_z
        if "theta" in updates:
            model = model.with_theta(model.theta - lr * result.grad_theta)
        logger.debug(f"step {step}: loss={value:.6g}")

    df = pd.DataFrame(history, columns=HISTORY_COLUMNS)
    logger.success(f"Guided generation complete: loss {df['loss'].iloc[0]:.6g} -> {df['loss'].iloc[-1]:.6g}")
    return GuidanceResult(x_final=x_final, x_T=x_T, z=z, theta=np.array(model.theta), history=df)
