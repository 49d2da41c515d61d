"""Discretize-then-optimize gradients: reverse-mode through the sampler steps."""
from typing import Tuple

import numpy as np

from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from samplers.conditioning import is_scheduled, knot_of_step, z_at_step
from samplers.trajectory import Kind, Trajectory
from utils.errors import ContractError
from utils.helpers import as_vector, ensure_finite
from utils.logger import logger


def backprop_through_sampler(traj: Trajectory, loss_grad, model: NoisePredictionModel,
                             schedule: VpSchedule) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Exact gradient of the discrete sampler composition x_T -> x_{t_eps}.

    Step i maps x_s to x_t = r x_s - k sigma_t (e^h - 1) eps(x_s, z_i, s) (+ frozen
    noise), so its VJP is a_s = r a_t - k sigma_t (e^h - 1) (a_t^T d eps/dx).
    grad_z is per knot for scheduled conditioning, summed over the steps
    each knot covers.
    """
    if traj.eps_outputs is None:
        raise ContractError("Backprop needs a trajectory recorded with eps outputs")
    a = as_vector(loss_grad, model.dim_x, "loss_grad").copy()
    k = 2.0 if traj.kind == Kind.SDE else 1.0
    times = traj.grid.times
    lambdas = traj.grid.lambdas(schedule)
    log_alphas = schedule.log_alpha(times)
    sigmas = schedule.sigma(times)

    n = traj.grid.n_steps
    scheduled = is_scheduled(traj.z_record)
    grad_z = np.zeros_like(traj.z_record)
    grad_theta = np.zeros(model.dim_theta)
    for i in range(n):
        s = float(times[i + 1])
        ratio = np.exp(log_alphas[i] - log_alphas[i + 1])
        weight = k * sigmas[i] * np.expm1(lambdas[i] - lambdas[i + 1])
        bundle = model.vjp(a, traj.states[i + 1], z_at_step(traj.z_record, i, n), s)
        if scheduled:
            grad_z[knot_of_step(traj.z_record, i, n)] -= weight * bundle.vjp_z
        else:
            grad_z -= weight * bundle.vjp_z
        grad_theta -= weight * bundle.vjp_theta
        a = ratio * a - weight * bundle.vjp_x

    ensure_finite(a, "backprop gradient")
    logger.debug(f"Backprop through {n} {traj.kind.value} steps")
    return a, grad_z, grad_theta
