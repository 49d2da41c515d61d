"""Cycle-SDE: recover the noise sequence that reproduces a given state sequence."""
from typing import Optional

import numpy as np

from diffusion.grid import TimeGrid
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from utils.errors import NumericalError
from utils.helpers import as_vector, ensure_finite, max_abs_error
from utils.logger import logger
from .conditioning import normalize_z, z_at_step
from .sampler import noise_generator, sample
from .trajectory import Kind, Trajectory


def recover_noise(states: np.ndarray, grid: TimeGrid, z, model: NoisePredictionModel,
                  schedule: VpSchedule) -> np.ndarray:
    """
    Solve the SDE step for its draw, one step at a time:

        eps_s = (x_t - (alpha_t/alpha_s) x_s + 2 sigma_t (e^h - 1) eps(x_s, z, s))
                / (sigma_t sqrt(e^{2h} - 1))
    """
    states = np.asarray(states, dtype=np.float64)
    n = grid.n_steps
    z = normalize_z(z, model.dim_z, n)
    lambdas = grid.lambdas(schedule)
    log_alphas = schedule.log_alpha(grid.times)
    sigmas = schedule.sigma(grid.times)

    noise = np.empty((n, model.dim_x))
    for i in range(n):
        s, t = float(grid.times[i + 1]), float(grid.times[i])
        h = float(lambdas[i] - lambdas[i + 1])
        scale = sigmas[i] * np.sqrt(np.expm1(2.0 * h))
        if h <= 0.0 or scale == 0.0:
            raise NumericalError(f"Zero-width step {i} ({s} -> {t}); noise cannot be recovered")
        ratio = np.exp(log_alphas[i] - log_alphas[i + 1])
        eps = model.eps(states[i + 1], z_at_step(z, i, n), s)
        noise[i] = (states[i] - ratio * states[i + 1] + 2.0 * sigmas[i] * np.expm1(h) * eps) / scale
    return ensure_finite(noise, "recovered noise")


def diffuse_states(x0, x_init, grid: TimeGrid, schedule: VpSchedule, seed: int) -> np.ndarray:
    """
    A forward-time state sequence consistent with the VP marginals:
    x_{t_i} = alpha_i x0 + sigma_i xi_i with independent seeded draws, pinned
    to x0 at t_eps and to x_init at t = 1.
    """
    x0 = as_vector(x0, name="x0")
    x_init = as_vector(x_init, x0.shape[0], "x_init")
    n = grid.n_steps
    draws = noise_generator(seed).standard_normal((n + 1, x0.shape[0]))
    alphas = schedule.alpha(grid.times)[:, None]
    sigmas = schedule.sigma(grid.times)[:, None]
    states = alphas * x0[None, :] + sigmas * draws
    states[0] = x0
    states[n] = x_init
    return states


def cycle_sde_invert(x0_target, grid: TimeGrid, z, model: NoisePredictionModel, schedule: VpSchedule,
                     x_init, seed: Optional[int] = 0) -> Trajectory:
    """
    Build marginal-consistent states ending at x0_target and return them as an
    SDE trajectory whose noise_seq replays them exactly.
    """
    states = diffuse_states(x0_target, x_init, grid, schedule, seed)
    noise = recover_noise(states, grid, z, model, schedule)
    z = normalize_z(z, model.dim_z, grid.n_steps)
    eps_outputs = np.array([model.eps(states[i + 1], z_at_step(z, i, grid.n_steps), grid.times[i + 1])
                            for i in range(grid.n_steps)])
    logger.debug(f"Recovered {grid.n_steps} noise draws by Cycle-SDE inversion")
    return Trajectory(grid=grid, kind=Kind.SDE, states=states, z_record=z,
                      eps_outputs=eps_outputs, noise_seq=noise, seed=seed)


def replay(traj: Trajectory, model: NoisePredictionModel, schedule: VpSchedule) -> Trajectory:
    """Re-run the SDE sampler from traj.x_init with traj's noise sequence."""
    return sample(model, schedule, traj.grid, traj.x_init, traj.z_record, kind=Kind.SDE,
                  rng_seed=traj.seed, noise_seq=traj.noise_seq)


def reconstruction_error(traj: Trajectory, model: NoisePredictionModel, schedule: VpSchedule) -> float:
    """Max absolute gap between replayed and recorded states."""
    return max_abs_error(replay(traj, model, schedule).states, traj.states)
