"""Constant or piecewise-constant (scheduled) conditioning vectors."""
import numpy as np

from utils.errors import ContractError


def normalize_z(z, dim_z: int, n_steps: int) -> np.ndarray:
    """
    Validate conditioning against the model and grid.

    A 1-D array of length dim_z is constant over time. A 2-D array of shape
    (knots, dim_z) is a schedule: the knots split the sampling intervals into
    equal consecutive blocks, so knots must divide n_steps. With knots ==
    n_steps, knot i is active on [t_i, t_{i+1}].
    """
    z = np.array(z, dtype=np.float64)
    if z.ndim == 1:
        if z.shape[0] != dim_z:
            raise ContractError(f"z must have length {dim_z}, got {z.shape[0]}")
    elif z.ndim == 2:
        knots = z.shape[0]
        if z.shape[1] != dim_z or knots < 1:
            raise ContractError(f"z schedule must have shape (knots, {dim_z}), got {z.shape}")
        if n_steps % knots:
            raise ContractError(f"{knots} knots do not split {n_steps} sampling steps into equal blocks")
    else:
        raise ContractError(f"z must be 1-D or 2-D, got shape {z.shape}")
    return z


def is_scheduled(z: np.ndarray) -> bool:
    return np.ndim(z) == 2


def knot_of_step(z: np.ndarray, step: int, n_steps: int) -> int:
    """Knot active on sampling interval `step`."""
    return step * z.shape[0] // n_steps


def knot_span(z: np.ndarray, knot: int, n_steps: int):
    """Sampling intervals [first, last) covered by a knot."""
    width = n_steps // z.shape[0]
    return knot * width, (knot + 1) * width


def z_at_step(z: np.ndarray, step: int, n_steps: int) -> np.ndarray:
    """Conditioning used on sampling interval `step` ([t_step, t_step+1])."""
    return z[knot_of_step(z, step, n_steps)] if is_scheduled(z) else z
