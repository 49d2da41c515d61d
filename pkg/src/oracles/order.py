"""Empirical convergence order of the adjoint solvers."""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from adjoint.solver import AdjointResult, solve_adjoint
from adjoint.steps import SecondOrderCoefficient
from config import CONVERGENCE_COLUMNS, REFERENCE_STEPS, ROUNDOFF_FLOOR
from diffusion.grid import Spacing, make_grid
from diffusion.schedule import VpSchedule
from models.base import NoisePredictionModel
from samplers.trajectory import Trajectory
from utils.errors import NumericalError
from utils.logger import logger

SOLVER_NAMES = {1: "AdjointDEIS-1", 2: "AdjointDEIS-2M"}


@dataclass
class OrderFit:
    """Least-squares line through (log h_max, log error)."""

    points: List[Tuple[float, float]]
    slope: float
    intercept: float
    dropped: int = 0

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "points": [list(p) for p in self.points],
            "dropped": self.dropped,
        }


def estimate_order(points: Iterable[Tuple[float, float]], floor: float = ROUNDOFF_FLOOR) -> OrderFit:
    """
    Fit log(error) = slope * log(h_max) + intercept.

    Errors below the roundoff floor are dropped; fewer than 3 remaining
    points is an error.
    """
    points = [(float(h), float(e)) for h, e in points]
    kept = [(h, e) for h, e in points if e >= floor and h > 0]
    dropped = len(points) - len(kept)
    if dropped:
        logger.warning(f"Dropped {dropped} points below the roundoff floor {floor:g} from the order fit")
    if len(kept) < 3:
        raise NumericalError(f"Order fit needs at least 3 points above the roundoff floor, got {len(kept)}")

    log_h = np.log([h for h, _ in kept])
    log_e = np.log([e for _, e in kept])
    slope, intercept = np.polyfit(log_h, log_e, 1)
    return OrderFit(points=kept, slope=float(slope), intercept=float(intercept), dropped=dropped)


@dataclass
class ConvergenceStudy:
    """
    Sweep adjoint step counts M over one trajectory and compare each solve with
    a dense order-2 reference on the same trajectory.
    """

    model: NoisePredictionModel
    schedule: VpSchedule
    traj: Trajectory
    loss_grad: np.ndarray
    spacing: Spacing = Spacing.UNIFORM_LAMBDA
    reference_steps: int = REFERENCE_STEPS
    coefficient: SecondOrderCoefficient = SecondOrderCoefficient.EXPM1
    _reference: Optional[AdjointResult] = field(default=None, init=False, repr=False)

    def _solve(self, order: int, n_steps: int) -> AdjointResult:
        grid = make_grid(self.schedule, n_steps, self.spacing, t_eps=self.traj.grid.t_start)
        return solve_adjoint(self.traj, self.loss_grad, grid, self.model, self.schedule,
                             order=order, coefficient=self.coefficient)

    @property
    def reference(self) -> AdjointResult:
        if self._reference is None:
            logger.info(f"Computing order-2 reference adjoint with M={self.reference_steps}")
            self._reference = self._solve(2, self.reference_steps)
        return self._reference

    def _row(self, order: int, n_steps: int) -> dict:
        result = self._solve(order, n_steps)
        ref = self.reference.state
        grid = make_grid(self.schedule, n_steps, self.spacing, t_eps=self.traj.grid.t_start)
        return {
            "solver": SOLVER_NAMES[order],
            "order": order,
            "kind": self.traj.kind.value,
            "M": n_steps,
            "h_max": grid.h_max(self.schedule),
            "err_ax": float(np.max(np.abs(result.state.a_x - ref.a_x))),
            "err_az": float(np.max(np.abs(result.state.a_z - ref.a_z))),
            "err_atheta": float(np.max(np.abs(result.state.a_theta - ref.a_theta))),
        }

    def run(self, steps: Sequence[int], orders: Sequence[int] = (1, 2)) -> pd.DataFrame:
        """One row per (order, M), ordered by order then M."""
        _ = self.reference
        jobs = [(order, m) for order in orders for m in steps]
        rows = [self._row(order, m) for order, m in tqdm(jobs, desc="Convergence sweep")]

        df = pd.DataFrame(rows, columns=CONVERGENCE_COLUMNS)
        df = df.sort_values(["order", "M"]).reset_index(drop=True)
        logger.success(f"Convergence sweep complete: {len(df)} runs")
        return df

    @staticmethod
    def fit(df: pd.DataFrame) -> Dict[int, Dict[str, OrderFit]]:
        """Per order: a fit for each channel and for the max over channels."""
        fits = {}
        channels = ["err_ax", "err_az", "err_atheta"]
        for order, group in df.groupby("order"):
            order_fits = {}
            for column in channels:
                order_fits[column] = estimate_order(zip(group["h_max"], group[column]))
            order_fits["max"] = estimate_order(zip(group["h_max"], group[channels].max(axis=1)))
            fits[int(order)] = order_fits
        return fits
