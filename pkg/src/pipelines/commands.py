"""Subcommand bodies: thin wrappers from a RunConfig to library calls and output files."""
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from adjoint.solver import AdjointResult, solve_adjoint
from config import CONVERGENCE_COLUMNS, HISTORY_COLUMNS
from diffusion.grid import TimeGrid, make_grid
from diffusion.schedule import VpSchedule
from guidance.optimizer import guided_generate
from models import AnalyticGaussianModel, NoisePredictionModel
from oracles.order import ConvergenceStudy
from samplers.cycle import cycle_sde_invert, reconstruction_error
from samplers.sampler import noise_generator, sample
from samplers.trajectory import Kind, Trajectory
from utils.errors import ContractError
from utils.helpers import as_vector, write_json
from utils.logger import logger
from .run_config import RunConfig

CYCLE_TOLERANCE = 1e-10


def build_setup(cfg: RunConfig) -> Tuple[VpSchedule, NoisePredictionModel, TimeGrid]:
    schedule = cfg.schedule.build()
    model = cfg.model.build(schedule)
    grid = cfg.grid.build(schedule)
    return schedule, model, grid


def noise_seed(cfg: RunConfig) -> int:
    """SDE noise stream, kept apart from the stream that draws x_T."""
    return cfg.seed + 1


def initial_inputs(cfg: RunConfig, model: NoisePredictionModel) -> Tuple[np.ndarray, np.ndarray]:
    if cfg.inputs.x_T is not None:
        x_T = as_vector(cfg.inputs.x_T, model.dim_x, "inputs.x_T")
    else:
        x_T = noise_generator(cfg.seed).standard_normal(model.dim_x)
    if cfg.inputs.z is not None:
        z = np.asarray(cfg.inputs.z, dtype=np.float64)
    elif isinstance(model, AnalyticGaussianModel):
        z = model.mu.copy()
    else:
        z = np.zeros(model.dim_z)
    return x_T, z


def run_sampler(cfg: RunConfig, schedule: VpSchedule, model: NoisePredictionModel, grid: TimeGrid) -> Trajectory:
    x_T, z = initial_inputs(cfg, model)
    return sample(model, schedule, grid, x_T, z, kind=cfg.adjoint.kind, rng_seed=noise_seed(cfg))


def adjoint_grid_for(cfg: RunConfig, schedule: VpSchedule, traj: Trajectory) -> TimeGrid:
    if cfg.adjoint.M is None:
        return traj.grid
    return make_grid(schedule, cfg.adjoint.M, cfg.adjoint.grid_spacing, t_eps=traj.grid.t_start)


def cmd_sample(cfg: RunConfig) -> Path:
    schedule, model, grid = build_setup(cfg)
    traj = run_sampler(cfg, schedule, model, grid)
    path = traj.save(cfg.output_dir / "trajectory.json")
    logger.success(f"Sampled {traj.kind.value} trajectory with {grid.n_steps} steps")
    return path


def compute_gradients(cfg: RunConfig, trajectory_path: Optional[Path] = None) -> AdjointResult:
    schedule, model, grid = build_setup(cfg)
    if trajectory_path is not None:
        traj = Trajectory.load(trajectory_path)
    else:
        traj = run_sampler(cfg, schedule, model, grid)
    if traj.kind != cfg.adjoint.kind:
        raise ContractError(
            f"Trajectory kind {traj.kind.value} does not match adjoint kind {cfg.adjoint.kind.value}"
        )
    loss = cfg.loss.build(model.dim_x)
    return solve_adjoint(
        traj,
        loss.grad(traj.x_final),
        adjoint_grid_for(cfg, schedule, traj),
        model,
        schedule,
        order=cfg.adjoint.order,
        kind=cfg.adjoint.kind,
        coefficient=cfg.adjoint.coefficient,
        state_source=cfg.adjoint.state_source,
    )


def cmd_grad(cfg: RunConfig, trajectory_path: Optional[Path] = None) -> Path:
    result = compute_gradients(cfg, trajectory_path)
    path = write_json(result.to_dict(), cfg.output_dir / "gradients.json")
    logger.success(f"Gradients written (nfe={result.nfe})")
    return path


def cmd_convergence(cfg: RunConfig) -> Tuple[Path, Path]:
    schedule, model, grid = build_setup(cfg)
    traj = run_sampler(cfg, schedule, model, grid)
    loss = cfg.loss.build(model.dim_x)
    block = cfg.convergence
    study = ConvergenceStudy(
        model=model,
        schedule=schedule,
        traj=traj,
        loss_grad=loss.grad(traj.x_final),
        spacing=block.spacing,
        reference_steps=block.reference_steps,
        coefficient=cfg.adjoint.coefficient,
    )
    df = study.run(block.steps, block.orders)
    fits = study.fit(df)

    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "convergence.csv"
    df[CONVERGENCE_COLUMNS].to_csv(csv_path, index=False, float_format="%.17g")
    summary = {
        str(order): {channel: fit.to_dict() for channel, fit in order_fits.items()}
        for order, order_fits in fits.items()
    }
    fits_path = write_json(summary, out_dir / "convergence_fits.json")
    for order, order_fits in fits.items():
        logger.info(f"order {order}: fitted slope {order_fits['max'].slope:.3f}")
    return csv_path, fits_path


def cmd_optimize(cfg: RunConfig) -> List[Path]:
    schedule, model, grid = build_setup(cfg)
    x_T, z = initial_inputs(cfg, model)
    loss = cfg.loss.build(model.dim_x)
    rates = cfg.optimize.rates()
    sweep = cfg.optimize.learning_rates is not None

    out_dir = cfg.output_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for lr in rates:
        opt = cfg.optimize.to_config(cfg.adjoint, lr)
        result = guided_generate(model, schedule, grid, x_T, z, loss, opt, seed=noise_seed(cfg))
        suffix = f"_lr{lr:g}" if sweep else ""
        history_path = out_dir / f"history{suffix}.csv"
        result.history[HISTORY_COLUMNS].to_csv(history_path, index=False, float_format="%.17g")
        logger.info(f"Saved {history_path}")
        final = result.to_dict()
        final["learning_rate"] = lr
        paths += [history_path, write_json(final, out_dir / f"final_state{suffix}.json")]
    return paths


def cmd_cycle_check(cfg: RunConfig) -> Path:
    schedule, model, grid = build_setup(cfg)
    x_T, z = initial_inputs(cfg, model)
    if cfg.inputs.x0 is not None:
        x0 = as_vector(cfg.inputs.x0, model.dim_x, "inputs.x0")
    else:
        x0 = sample(model, schedule, grid, x_T, z, kind=Kind.SDE, rng_seed=noise_seed(cfg)).x_final

    traj = cycle_sde_invert(x0, grid, z, model, schedule, x_init=x_T, seed=noise_seed(cfg) + 1)
    error = reconstruction_error(traj, model, schedule)
    report = {
        "n_steps": grid.n_steps,
        "d": model.dim_x,
        "max_reconstruction_error": error,
        "tolerance": CYCLE_TOLERANCE,
        "passed": bool(error <= CYCLE_TOLERANCE),
    }
    path = write_json(report, cfg.output_dir / "cycle_report.json")
    if report["passed"]:
        logger.success(f"Cycle-SDE reconstruction error {error:.3g}")
    else:
        logger.warning(f"Cycle-SDE reconstruction error {error:.3g} above {CYCLE_TOLERANCE:g}")
    return path
