"""AdjointDEIS-1 and AdjointDEIS-2M steps.

The adjoint runs forward in t, from t_eps toward 1. For a step t -> s (t < s)
with h = lambda_s - lambda_t (negative, lambda decreases in t):

    a_x(s) = (alpha_t/alpha_s) a_x(t) + k sigma_s (e^h - 1) V(x; t) / alpha_s^2
    a_z(s) = a_z(t)                   + k sigma_s (e^h - 1) V(z; t) / alpha_s
    a_th(s)= a_th(t)                  + k sigma_s (e^h - 1) V(th; t) / alpha_s

with V(x; t) = alpha_t^2 a^T deps/dx, V(z; t) = alpha_t a^T deps/dz,
V(th; t) = alpha_t a^T deps/dth, and k = 1 (ODE) or 2 (SDE).
"""
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from config import RHO_MIN
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from utils.errors import ContractError, NumericalError
from .phi import phi1, phi2


class SecondOrderCoefficient(str, Enum):
    EXPM1 = "expm1"   # (e^h - 1) / (2 rho)
    PHI2 = "phi2"     # h phi_2(h) / rho


@dataclass(frozen=True)
class AdjointState:
    """
    Cotangents (a_x, a_z, a_theta) at time t.

    a_z is a vector for constant conditioning or a (knots, dim_z) array of
    per-knot buckets for scheduled conditioning.
    """

    a_x: np.ndarray
    a_z: np.ndarray
    a_theta: np.ndarray
    t: float

    @classmethod
    def initial(cls, loss_grad, t: float, dim_z: int, dim_theta: int,
                n_knots: Optional[int] = None) -> "AdjointState":
        a_z = np.zeros(dim_z) if n_knots is None else np.zeros((n_knots, dim_z))
        return cls(np.array(loss_grad, dtype=np.float64), a_z, np.zeros(dim_theta), float(t))

    @property
    def a_z_total(self) -> np.ndarray:
        """Bucket sum for scheduled conditioning, a_z itself otherwise."""
        return self.a_z.sum(axis=0) if self.a_z.ndim == 2 else self.a_z

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.a_x)) and np.all(np.isfinite(self.a_z))
                    and np.all(np.isfinite(self.a_theta)))

    def to_dict(self) -> dict:
        return {"a_x": self.a_x.tolist(), "a_z": self.a_z.tolist(), "a_theta": self.a_theta.tolist(), "t": self.t}


@dataclass(frozen=True)
class ScaledVjp:
    """V(x; t), V(z; t), V(theta; t) at evaluation time t."""

    v_x: np.ndarray
    v_z: np.ndarray
    v_theta: np.ndarray
    t: float


@dataclass(frozen=True)
class AdjointStepPlan:
    """Step t -> s in log-SNR; r and rho only for the multistep update."""

    t: float
    s: float
    h: float
    sde_factor: int = 1
    r: Optional[float] = None
    rho: Optional[float] = None


def plan_step(schedule: VpSchedule, t: float, s: float, sde_factor: int = 1,
              r: Optional[float] = None) -> AdjointStepPlan:
    if not s > t:
        raise ContractError(f"Adjoint steps run forward in t, got t={t}, s={s}")
    if sde_factor not in (1, 2):
        raise ContractError(f"sde_factor must be 1 or 2, got {sde_factor}")
    lam_t = float(schedule.lambda_(t))
    h = float(schedule.lambda_(s)) - lam_t
    rho = None
    if r is not None:
        if not r < t:
            raise ContractError(f"Previous point must precede t, got r={r}, t={t}")
        rho = (lam_t - float(schedule.lambda_(r))) / h
        if rho <= RHO_MIN:
            raise ContractError(f"Step ratio rho={rho:.3g} below floor {RHO_MIN}")
    return AdjointStepPlan(t=float(t), s=float(s), h=h, sde_factor=sde_factor, r=r, rho=rho)


def scaled_vjp(a_x, t: float, x_t, z_t, model: NoisePredictionModel, schedule: VpSchedule) -> ScaledVjp:
    bundle = model.vjp(a_x, x_t, z_t, t)
    if not bundle.is_finite():
        raise NumericalError(f"Non-finite vector-Jacobian product at t={t}")
    alpha_t = float(schedule.alpha(t))
    return ScaledVjp(alpha_t ** 2 * bundle.vjp_x, alpha_t * bundle.vjp_z, alpha_t * bundle.vjp_theta, float(t))


def _alpha_ratio(schedule: VpSchedule, plan: AdjointStepPlan) -> float:
    """alpha_t / alpha_s from one rounding of the log difference."""
    return float(np.exp(schedule.log_alpha(plan.t) - schedule.log_alpha(plan.s)))


def _add_z(a_z: np.ndarray, increment: np.ndarray, z_bucket: Optional[int]) -> np.ndarray:
    if a_z.ndim == 1:
        return a_z + increment
    if z_bucket is None:
        raise ContractError("Scheduled conditioning needs a knot bucket for every step")
    out = a_z.copy()
    out[z_bucket] += increment
    return out


def _finish(state: AdjointState, a_x, a_z, a_theta, s: float) -> AdjointState:
    new = replace(state, a_x=a_x, a_z=a_z, a_theta=a_theta, t=s)
    if not new.is_finite():
        raise NumericalError(f"Adjoint state became non-finite at t={s}")
    return new


def apply_first_order(state: AdjointState, plan: AdjointStepPlan, v: ScaledVjp, schedule: VpSchedule,
                      z_bucket: Optional[int] = None) -> AdjointState:
    alpha_s = float(schedule.alpha(plan.s))
    coeff = plan.sde_factor * float(schedule.sigma(plan.s)) * plan.h * phi1(plan.h)

    a_x = _alpha_ratio(schedule, plan) * state.a_x + coeff / alpha_s ** 2 * v.v_x
    a_z = _add_z(state.a_z, coeff / alpha_s * v.v_z, z_bucket)
    a_theta = state.a_theta + coeff / alpha_s * v.v_theta
    return _finish(state, a_x, a_z, a_theta, plan.s)


def apply_multistep(state: AdjointState, plan: AdjointStepPlan, v: ScaledVjp, v_prev: ScaledVjp,
                    schedule: VpSchedule, z_bucket: Optional[int] = None,
                    coefficient: SecondOrderCoefficient = SecondOrderCoefficient.EXPM1) -> AdjointState:
    if plan.rho is None:
        raise ContractError("Multistep update needs a planned previous point")
    alpha_s = float(schedule.alpha(plan.s))
    sigma_s = float(schedule.sigma(plan.s))
    h = plan.h
    first = plan.sde_factor * sigma_s * h * phi1(h)
    if SecondOrderCoefficient(coefficient) == SecondOrderCoefficient.EXPM1:
        second = first / (2.0 * plan.rho)
    else:
        second = plan.sde_factor * sigma_s * h * phi2(h) / plan.rho

    a_x = _alpha_ratio(schedule, plan) * state.a_x + (first * v.v_x + second * (v.v_x - v_prev.v_x)) / alpha_s ** 2
    a_z = _add_z(state.a_z, (first * v.v_z + second * (v.v_z - v_prev.v_z)) / alpha_s, z_bucket)
    a_theta = state.a_theta + (first * v.v_theta + second * (v.v_theta - v_prev.v_theta)) / alpha_s
    return _finish(state, a_x, a_z, a_theta, plan.s)


def adjoint_deis_1_step(state: AdjointState, s: float, x_t, z_t, model: NoisePredictionModel,
                        schedule: VpSchedule, sde_factor: int = 1,
                        z_bucket: Optional[int] = None) -> AdjointState:
    """AdjointDEIS-1: one first-order exponential-integrator step from state.t to s."""
    plan = plan_step(schedule, state.t, s, sde_factor)
    v = scaled_vjp(state.a_x, state.t, x_t, z_t, model, schedule)
    return apply_first_order(state, plan, v, schedule, z_bucket)


def adjoint_deis_2m_step(state: AdjointState, s: float, prev: Optional[ScaledVjp], x_t, z_t,
                         model: NoisePredictionModel, schedule: VpSchedule, sde_factor: int = 1,
                         z_bucket: Optional[int] = None,
                         coefficient: SecondOrderCoefficient = SecondOrderCoefficient.EXPM1,
                         ) -> Tuple[AdjointState, ScaledVjp]:
    """
    AdjointDEIS-2M: multistep update reusing the buffered V at r < t.

    Returns the new state and the fresh V at t for the buffer.
    """
    if prev is None:
        raise ContractError("AdjointDEIS-2M needs a buffered ScaledVjp from a previous step")
    plan = plan_step(schedule, state.t, s, sde_factor, r=prev.t)
    v = scaled_vjp(state.a_x, state.t, x_t, z_t, model, schedule)
    return apply_multistep(state, plan, v, prev, schedule, z_bucket, coefficient), v
