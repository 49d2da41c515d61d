"""Time grids for sampling and adjoint solves."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from utils.errors import ContractError
from .schedule import VpSchedule


class Spacing(str, Enum):
    UNIFORM_T = "uniform-in-t"
    UNIFORM_LAMBDA = "uniform-in-lambda"
    EXPLICIT = "explicit"


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing times t_0 < ... < t_N inside (0, 1]."""

    times: np.ndarray
    spacing: Spacing = Spacing.EXPLICIT
    _lambdas: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        times = np.array(self.times, dtype=np.float64)
        if times.ndim != 1 or times.shape[0] < 2:
            raise ContractError("A time grid needs at least 2 points")
        if not np.all(np.isfinite(times)):
            raise ContractError("Grid times must be finite")
        if np.any(np.diff(times) <= 0.0):
            raise ContractError(f"Grid times must be strictly increasing, got {times.tolist()}")
        if times[0] <= 0.0 or times[-1] > 1.0:
            raise ContractError(f"Grid times must lie in (0, 1], got [{times[0]}, {times[-1]}]")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "spacing", Spacing(self.spacing))

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_stop(self) -> float:
        return float(self.times[-1])

    def lambdas(self, schedule: VpSchedule) -> np.ndarray:
        if schedule not in self._lambdas:
            self._lambdas[schedule] = np.asarray(schedule.lambda_(self.times), dtype=np.float64)
        return self._lambdas[schedule]

    def h_max(self, schedule: VpSchedule) -> float:
        """Largest log-SNR step |lambda_{i+1} - lambda_i|."""
        return float(np.max(np.abs(np.diff(self.lambdas(schedule)))))

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "spacing": self.spacing.value}

    @classmethod
    def from_dict(cls, data: dict) -> "TimeGrid":
        return cls(np.asarray(data["times"], dtype=np.float64), Spacing(data.get("spacing", "explicit")))


def make_grid(
    schedule: VpSchedule,
    n_steps: int,
    spacing: Spacing = Spacing.UNIFORM_T,
    t_eps: Optional[float] = None,
) -> TimeGrid:
    """
    Build n_steps + 1 points from t_eps to 1.

    uniform-in-t spaces t linearly; uniform-in-lambda spaces lambda linearly
    and maps back through t_of_lambda.
    """
    if n_steps < 1:
        raise ContractError(f"n_steps must be >= 1, got {n_steps}")
    t_eps = schedule.t_eps if t_eps is None else t_eps
    spacing = Spacing(spacing)

    if spacing == Spacing.UNIFORM_T:
        times = np.linspace(t_eps, schedule.t_end, n_steps + 1)
    elif spacing == Spacing.UNIFORM_LAMBDA:
        lam_hi = float(schedule.lambda_(t_eps))
        lam_lo = schedule.lambda_min
        lams = np.linspace(lam_hi, lam_lo, n_steps + 1)
        times = np.asarray(schedule.t_of_lambda(lams), dtype=np.float64)
        times[0], times[-1] = t_eps, schedule.t_end
    else:
        raise ContractError("Explicit grids are built from a list of times, not make_grid")
    return TimeGrid(times, spacing)


def explicit_grid(times: Sequence[float]) -> TimeGrid:
    return TimeGrid(np.asarray(times, dtype=np.float64), Spacing.EXPLICIT)
