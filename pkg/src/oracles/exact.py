"""Closed-form flow and continuous adjoint for the analytic Gaussian model.

Under eps = sigma (x - alpha mu) / s^2 with s_t^2 = alpha_t^2 c^2 + sigma_t^2 the
probability-flow ODE is affine in x and its flow from t = 1 is

    x_t = alpha_t mu + (s_t / s_1) (x_1 - alpha_1 mu).

The multiplier m = s_{t_e} / s_1 also equals exp(-int_{t_e}^1 A dt) with
A = f + g^2 / (2 s^2), which is what the quadrature route evaluates.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import QUADRATURE_POINTS
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from models.gaussian import AnalyticGaussianModel
from utils.errors import ContractError
from utils.helpers import as_vector
from utils.logger import logger

CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"


@dataclass(frozen=True)
class FlowMultiplier:
    """m = s_{t_e}/s_1 and dm/dc, with the gap to the half-resolution estimate."""

    value: float
    d_dc: float
    halving_gap: float = 0.0


def _require_analytic(model: NoisePredictionModel) -> AnalyticGaussianModel:
    if not isinstance(model, AnalyticGaussianModel):
        raise ContractError(f"Exact adjoint needs AnalyticGaussianModel, got {type(model).__name__}")
    return model


def _scale(model: AnalyticGaussianModel, schedule: VpSchedule, t):
    alpha_sq = np.exp(2.0 * schedule.log_alpha(t))
    return np.sqrt(alpha_sq * model.c ** 2 + schedule.sigma_sq(t))


def exact_flow(model: NoisePredictionModel, schedule: VpSchedule, x_T, t: float) -> np.ndarray:
    """State at time t of the exact probability-flow trajectory started at x_T (t = 1)."""
    model = _require_analytic(model)
    x_T = as_vector(x_T, model.dim_x, "x_T")
    t_end = schedule.t_end
    m = float(_scale(model, schedule, t) / _scale(model, schedule, t_end))
    mu = model.mu
    return float(schedule.alpha(t)) * mu + m * (x_T - float(schedule.alpha(t_end)) * mu)


def flow_multiplier(model: NoisePredictionModel, schedule: VpSchedule,
                    t_e: Optional[float] = None) -> FlowMultiplier:
    model = _require_analytic(model)
    t_e = schedule.t_eps if t_e is None else t_e
    c = model.c
    s_e, s_1 = float(_scale(model, schedule, t_e)), float(_scale(model, schedule, schedule.t_end))
    a_e_sq = float(np.exp(2.0 * schedule.log_alpha(t_e)))
    a_1_sq = float(np.exp(2.0 * schedule.log_alpha(schedule.t_end)))
    m = s_e / s_1
    return FlowMultiplier(m, m * (a_e_sq * c / s_e ** 2 - a_1_sq * c / s_1 ** 2))


def _simpson(values: np.ndarray, dt: float) -> float:
    weights = np.ones_like(values)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(dt / 3.0 * weights @ values)


def _quadrature(model: AnalyticGaussianModel, schedule: VpSchedule, t_e: float, n: int) -> Tuple[float, float]:
    ts = np.linspace(t_e, schedule.t_end, n + 1)
    dt = (schedule.t_end - t_e) / n
    s_sq = _scale(model, schedule, ts) ** 2
    g2 = schedule.diffusion_coeff_sq(ts)
    coeff = schedule.drift_coeff(ts) + g2 / (2.0 * s_sq)
    # dA/dc = -g^2 alpha^2 c / s^4
    dcoeff_dc = -g2 * np.exp(2.0 * schedule.log_alpha(ts)) * model.c / s_sq ** 2
    m = float(np.exp(-_simpson(coeff, dt)))
    return m, -m * _simpson(dcoeff_dc, dt)


def flow_multiplier_quadrature(model: NoisePredictionModel, schedule: VpSchedule, t_e: Optional[float] = None,
                               n: int = QUADRATURE_POINTS) -> FlowMultiplier:
    """Composite Simpson estimate of m and dm/dc; also reports the gap to n/2 points."""
    model = _require_analytic(model)
    if n < 4 or n % 4:
        raise ContractError(f"Quadrature needs a positive multiple of 4 intervals, got {n}")
    t_e = schedule.t_eps if t_e is None else t_e
    m, dm = _quadrature(model, schedule, t_e, n)
    m_half, _ = _quadrature(model, schedule, t_e, n // 2)
    gap = abs(m - m_half)
    if gap > 1e-9:
        logger.warning(f"Flow quadrature not converged: |m(n) - m(n/2)| = {gap:.3g}")
    return FlowMultiplier(m, dm, gap)


def exact_linear_adjoint(model: NoisePredictionModel, schedule: VpSchedule, x_T, loss_grad,
                         t_e: Optional[float] = None, method: str = QUADRATURE,
                         n: int = QUADRATURE_POINTS) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Continuous-adjoint gradients of L(x_{t_e}) for fixed dL/dx_{t_e} = loss_grad:

        grad_xT = m g,  grad_mu = (alpha_e - m alpha_1) g,  grad_c = (dm/dc) g.(x_T - alpha_1 mu)
    """
    model = _require_analytic(model)
    x_T = as_vector(x_T, model.dim_x, "x_T")
    g = as_vector(loss_grad, model.dim_x, "loss_grad")
    t_e = schedule.t_eps if t_e is None else t_e
    if method == QUADRATURE:
        mult = flow_multiplier_quadrature(model, schedule, t_e, n)
    elif method == CLOSED_FORM:
        mult = flow_multiplier(model, schedule, t_e)
    else:
        raise ContractError(f"Unknown exact-adjoint method {method!r}")

    alpha_e, alpha_1 = float(schedule.alpha(t_e)), float(schedule.alpha(schedule.t_end))
    grad_xT = mult.value * g
    grad_mu = (alpha_e - mult.value * alpha_1) * g
    grad_c = np.array([mult.d_dc * float(g @ (x_T - alpha_1 * model.mu))])
    return grad_xT, grad_mu, grad_c
