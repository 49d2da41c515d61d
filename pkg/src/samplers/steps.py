"""First-order exponential-integrator steps for the diffusion ODE and SDE."""
from typing import Tuple, Union

import numpy as np

from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from utils.errors import ContractError
from utils.helpers import as_vector


def _step_coefficients(schedule: VpSchedule, s: float, t: float):
    """(alpha_t / alpha_s, sigma_t, h) for a step from s down to t."""
    if t > s:
        raise ContractError(f"Sampling runs from s down to t, got s={s}, t={t}")
    ratio = float(np.exp(schedule.log_alpha(t) - schedule.log_alpha(s)))
    sigma_t = float(schedule.sigma(t))
    h = float(schedule.lambda_(t) - schedule.lambda_(s))
    return ratio, sigma_t, h


def ode_step(x_s, s: float, t: float, z, model: NoisePredictionModel, schedule: VpSchedule,
             return_eps: bool = False) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    DDIM / DPM-Solver-1 step of the probability-flow ODE:

        x_t = (alpha_t / alpha_s) x_s - sigma_t (e^h - 1) eps(x_s, z, s),  h = lambda_t - lambda_s

    s == t is allowed and returns x_s.
    """
    x_s = as_vector(x_s, model.dim_x, "x_s")
    ratio, sigma_t, h = _step_coefficients(schedule, s, t)
    eps = model.eps(x_s, z, s)
    x_t = ratio * x_s - sigma_t * np.expm1(h) * eps
    if return_eps:
        return x_t, eps
    return x_t


def sde_step(x_s, s: float, t: float, z, noise, model: NoisePredictionModel, schedule: VpSchedule,
             return_eps: bool = False) -> Union[np.ndarray, Tuple[np.ndarray, np.ndarray]]:
    """
    First-order step of the diffusion SDE with an explicit standard-normal draw:

        x_t = (alpha_t / alpha_s) x_s - 2 sigma_t (e^h - 1) eps(x_s, z, s)
              + sigma_t sqrt(e^{2h} - 1) noise
    """
    x_s = as_vector(x_s, model.dim_x, "x_s")
    noise = as_vector(noise, model.dim_x, "noise")
    ratio, sigma_t, h = _step_coefficients(schedule, s, t)
    eps = model.eps(x_s, z, s)
    x_t = ratio * x_s - 2.0 * sigma_t * np.expm1(h) * eps + sigma_t * np.sqrt(np.expm1(2.0 * h)) * noise
    if return_eps:
        return x_t, eps
    return x_t
