from .phi import phi1, phi2
from .solver import AdjointResult, solve_adjoint, solve_adjoint_scheduled_z
from .steps import (
    AdjointState,
    AdjointStepPlan,
    ScaledVjp,
    SecondOrderCoefficient,
    adjoint_deis_1_step,
    adjoint_deis_2m_step,
)

__all__ = [
    "phi1",
    "phi2",
    "AdjointResult",
    "solve_adjoint",
    "solve_adjoint_scheduled_z",
    "AdjointState",
    "AdjointStepPlan",
    "ScaledVjp",
    "SecondOrderCoefficient",
    "adjoint_deis_1_step",
    "adjoint_deis_2m_step",
]
