"""JSON run configuration, validated before any computation."""
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from adjoint.solver import RECORDED, RESIMULATE
from adjoint.steps import SecondOrderCoefficient
from config import (
    BETA0,
    BETA1,
    CONVERGENCE_STEPS,
    LEARNING_RATE,
    MLP_HIDDEN,
    MLP_INIT_SCALE,
    N_OPT_STEPS,
    OUTPUT_DIR,
    REFERENCE_STEPS,
    T_EPS,
)
from diffusion.grid import Spacing, TimeGrid, explicit_grid, make_grid
from diffusion.schedule import VpSchedule
from guidance.losses import GuidanceLoss, build_loss
from guidance.optimizer import OptimizeConfig, UpdateTarget
from models import AnalyticGaussianModel, NoisePredictionModel, TinyMlpModel, ZeroModel
from samplers.trajectory import Kind
from utils.errors import ConfigError
from utils.helpers import read_json
from utils.logger import logger


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ScheduleBlock(_Block):
    beta0: float = Field(default=BETA0, gt=0.0)
    beta1: float = Field(default=BETA1, gt=0.0)
    t_eps: float = Field(default=T_EPS, gt=0.0, lt=1.0)

    def build(self) -> VpSchedule:
        return VpSchedule(beta0=self.beta0, beta1=self.beta1, t_eps=self.t_eps)


class ModelBlock(_Block):
    type: Literal["gaussian", "mlp", "zero"] = "gaussian"
    d: int = Field(default=2, ge=1)
    # gaussian: mean (defaults to zeros) and data scale
    mu: Optional[List[float]] = None
    c: float = Field(default=1.0, gt=0.0)
    # mlp
    dim_z: Optional[int] = Field(default=None, ge=1)
    hidden: int = Field(default=MLP_HIDDEN, ge=1)
    init_seed: int = Field(default=0, ge=0)
    init_scale: float = Field(default=MLP_INIT_SCALE, ge=0.0)
    weights_path: Optional[str] = None

    @model_validator(mode="after")
    def _check_mu(self):
        if self.mu is not None and len(self.mu) != self.d:
            raise ValueError(f"mu must have length d={self.d}, got {len(self.mu)}")
        return self

    def build(self, schedule: VpSchedule) -> NoisePredictionModel:
        if self.type == "gaussian":
            mu = np.zeros(self.d) if self.mu is None else self.mu
            return AnalyticGaussianModel(schedule, mu, self.c)
        dim_z = self.dim_z or self.d
        if self.type == "zero":
            return ZeroModel(schedule, self.d, dim_z)
        if self.weights_path:
            return TinyMlpModel.load_weights(Path(self.weights_path), schedule, self.d, dim_z, self.hidden)
        return TinyMlpModel(schedule, self.d, dim_z, self.hidden, seed=self.init_seed, init_scale=self.init_scale)


class GridBlock(_Block):
    n_steps: Optional[int] = Field(default=None, ge=1)
    times: Optional[List[float]] = None
    spacing: Spacing = Spacing.UNIFORM_T
    t_eps: Optional[float] = Field(default=None, gt=0.0, lt=1.0)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.n_steps is None) == (self.times is None):
            raise ValueError("grid needs exactly one of n_steps or times")
        return self

    def build(self, schedule: VpSchedule) -> TimeGrid:
        if self.times is not None:
            return explicit_grid(self.times)
        return make_grid(schedule, self.n_steps, self.spacing, t_eps=self.t_eps)


class AdjointBlock(_Block):
    order: Literal[1, 2] = 1
    kind: Kind = Kind.ODE
    # adjoint steps; None reuses the sampling grid
    M: Optional[int] = Field(default=None, ge=1)
    grid_spacing: Spacing = Spacing.UNIFORM_T
    coefficient: SecondOrderCoefficient = SecondOrderCoefficient.EXPM1
    state_source: Literal["recorded", "resimulate"] = RECORDED

    @model_validator(mode="after")
    def _check_source(self):
        if self.state_source == RESIMULATE and self.kind == Kind.SDE:
            raise ValueError("state_source=resimulate is only available for kind=ode")
        return self


class InputsBlock(_Block):
    """Sampler inputs; x_T is drawn from the seed when absent."""

    x_T: Optional[List[float]] = None
    # constant vector, or knots splitting the sampling steps into equal blocks
    z: Optional[Union[List[float], List[List[float]]]] = None
    # cycle-check target; defaults to an SDE sample
    x0: Optional[List[float]] = None


class LossBlock(_Block):
    type: Literal["target", "symmetric", "linear", "zero"] = "zero"
    target: Optional[List[float]] = None
    a: Optional[List[float]] = None
    b: Optional[List[float]] = None
    weights: Optional[List[float]] = None

    def build(self, dim: int) -> GuidanceLoss:
        return build_loss(self.model_dump(exclude_none=True), dim)


class OptimizeBlock(_Block):
    learning_rate: float = Field(default=LEARNING_RATE, ge=0.0)
    # sweep: one run per rate, overrides learning_rate
    learning_rates: Optional[List[float]] = None
    n_opt_steps: int = Field(default=N_OPT_STEPS, ge=1)
    update_set: List[UpdateTarget] = Field(default_factory=lambda: ["x_T", "z"])

    @model_validator(mode="after")
    def _check_rates(self):
        if self.learning_rates is not None:
            if not self.learning_rates:
                raise ValueError("learning_rates must not be empty")
            if any(lr < 0 for lr in self.learning_rates):
                raise ValueError("learning rates must be non-negative")
        return self

    def rates(self) -> List[float]:
        return list(self.learning_rates) if self.learning_rates else [self.learning_rate]

    def to_config(self, adjoint: AdjointBlock, learning_rate: float) -> OptimizeConfig:
        return OptimizeConfig(
            learning_rate=learning_rate,
            n_opt_steps=self.n_opt_steps,
            update_set=self.update_set,
            order=adjoint.order,
            kind=adjoint.kind,
            n_adjoint_steps=adjoint.M,
            adjoint_spacing=adjoint.grid_spacing,
            coefficient=adjoint.coefficient,
        )


class ConvergenceBlock(_Block):
    steps: List[int] = Field(default_factory=lambda: list(CONVERGENCE_STEPS))
    orders: List[Literal[1, 2]] = Field(default_factory=lambda: [1, 2])
    reference_steps: int = Field(default=REFERENCE_STEPS, ge=2)
    spacing: Spacing = Spacing.UNIFORM_LAMBDA

    @model_validator(mode="after")
    def _check_steps(self):
        if len(self.steps) < 3:
            raise ValueError("a convergence sweep needs at least 3 step counts")
        if any(m < 2 for m in self.steps):
            raise ValueError("every step count must be >= 2")
        return self


class RunConfig(_Block):
    schedule: ScheduleBlock = Field(default_factory=ScheduleBlock)
    model: ModelBlock = Field(default_factory=ModelBlock)
    grid: GridBlock
    adjoint: AdjointBlock = Field(default_factory=AdjointBlock)
    inputs: InputsBlock = Field(default_factory=InputsBlock)
    loss: LossBlock = Field(default_factory=LossBlock)
    optimize: OptimizeBlock = Field(default_factory=OptimizeBlock)
    convergence: ConvergenceBlock = Field(default_factory=ConvergenceBlock)
    seed: int = Field(default=0, ge=0)
    output: str = str(OUTPUT_DIR)

    @property
    def output_dir(self) -> Path:
        return Path(self.output)


def parse_run_config(data: dict, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    """Validate a config dict; seed and out override the file's values."""
    if not isinstance(data, dict):
        raise ConfigError("Run config must be a JSON object")
    data = dict(data)
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["output"] = str(out)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid run config:\n{e}") from e


def load_run_config(path: Path, seed: Optional[int] = None, out: Optional[str] = None) -> RunConfig:
    logger.info(f"Loading run config from {path}")
    return parse_run_config(read_json(path), seed=seed, out=out)
