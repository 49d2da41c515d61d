"""Forward generation from t = 1 down to t_eps with trajectory recording."""
from typing import Optional

import numpy as np

from diffusion.grid import TimeGrid
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from utils.errors import ContractError
from utils.helpers import as_vector, ensure_finite
from utils.logger import logger
from .conditioning import normalize_z, z_at_step
from .steps import ode_step, sde_step
from .trajectory import Kind, Trajectory


def noise_generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; the only source of SDE noise."""
    return np.random.Generator(np.random.Philox(seed))


def draw_noise(seed: int, n_steps: int, dim: int) -> np.ndarray:
    """One standard-normal draw per step, row i for step i."""
    return noise_generator(seed).standard_normal((n_steps, dim))


def sample(
    model: NoisePredictionModel,
    schedule: VpSchedule,
    grid: TimeGrid,
    x_init,
    z,
    kind: Kind = Kind.ODE,
    rng_seed: Optional[int] = 0,
    noise_seq: Optional[np.ndarray] = None,
    record_eps: bool = True,
) -> Trajectory:
    """
    Run the first-order sampler from grid.t_stop = 1 down to grid.t_start.

    For kind=sde the draws come from noise_seq when given (frozen
    realization, Cycle-SDE replay), otherwise from Philox(rng_seed).
    """
    kind = Kind(kind)
    x_init = as_vector(x_init, model.dim_x, "x_init")
    if abs(grid.t_stop - schedule.t_end) > 1e-12:
        raise ContractError(f"Sampling grid must end at t=1, got {grid.t_stop}")
    n = grid.n_steps
    z = normalize_z(z, model.dim_z, n)

    if kind == Kind.SDE:
        if noise_seq is None:
            noise_seq = draw_noise(rng_seed, n, model.dim_x)
        noise_seq = np.asarray(noise_seq, dtype=np.float64)
        if noise_seq.shape != (n, model.dim_x):
            raise ContractError(f"noise_seq must have shape ({n}, {model.dim_x}), got {noise_seq.shape}")
    else:
        noise_seq = None

    times = grid.times
    states = np.empty((n + 1, model.dim_x))
    eps_outputs = np.empty((n, model.dim_x)) if record_eps else None
    states[n] = x_init

    # шаги идут от t=1 к t_eps
    for i in range(n - 1, -1, -1):
        s, t = float(times[i + 1]), float(times[i])
        if kind == Kind.ODE:
            x_t, eps = ode_step(states[i + 1], s, t, z_at_step(z, i, n), model, schedule, return_eps=True)
        else:
            x_t, eps = sde_step(states[i + 1], s, t, z_at_step(z, i, n), noise_seq[i], model, schedule,
                                return_eps=True)
        states[i] = x_t
        if record_eps:
            eps_outputs[i] = eps

    ensure_finite(states, f"{kind.value} trajectory")
    logger.debug(f"Sampled {kind.value} trajectory: {n} steps, d={model.dim_x}")
    return Trajectory(
        grid=grid,
        kind=kind,
        states=states,
        z_record=z,
        eps_outputs=eps_outputs,
        noise_seq=noise_seq,
        seed=rng_seed,
    )
