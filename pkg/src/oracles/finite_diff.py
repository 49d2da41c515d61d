"""Central finite differences over a black-box scalar map."""
from typing import Callable

import numpy as np

from config import FD_STEP
from utils.errors import ContractError, NumericalError
from utils.helpers import as_vector


def finite_diff_grad(func: Callable[[np.ndarray], float], v, step: float = FD_STEP) -> np.ndarray:
    """
    (f(v + step e_i) - f(v - step e_i)) / (2 step) for every coordinate i.

    func must be deterministic; SDE maps need their noise sequence frozen.
    """
    if not step > 0:
        raise ContractError(f"Finite-difference step must be positive, got {step}")
    v = as_vector(v, name="v")
    grad = np.empty_like(v)
    for i in range(v.shape[0]):
        e = np.zeros_like(v)
        e[i] = step
        f_plus, f_minus = float(func(v + e)), float(func(v - e))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError(f"Non-finite loss while differencing coordinate {i}")
        grad[i] = (f_plus - f_minus) / (2.0 * step)
    return grad
