"""Helper utilities."""
import json
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, ContractError, NumericalError
from .logger import logger


def as_vector(value, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """
    Coerce value to a 1-D float64 array, checking its length.

    Examples:
        as_vector([1, 2], 2) -> array([1., 2.])
        as_vector(3.0) -> array([3.])
    """
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.ndim != 1:
        raise ContractError(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ContractError(f"{name} must have length {length}, got {arr.shape[0]}")
    return arr


def ensure_finite(value, what: str) -> np.ndarray:
    """Raise NumericalError if value has NaN or inf entries."""
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"Non-finite values in {what}")
    return arr


def relative_error(approx, reference) -> float:
    """Relative error in the 2-norm; falls back to absolute when reference is zero."""
    approx = np.asarray(approx, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    scale = np.linalg.norm(reference)
    diff = np.linalg.norm(approx - reference)
    if scale == 0.0:
        return float(diff)
    return float(diff / scale)


def max_abs_error(approx, reference) -> float:
    """Largest entrywise absolute difference."""
    diff = np.abs(np.asarray(approx, dtype=np.float64) - np.asarray(reference, dtype=np.float64))
    return float(diff.max()) if diff.size else 0.0


def to_jsonable(value: Any) -> Any:
    """Convert numpy arrays/scalars to plain lists and floats (repr is lossless at f64)."""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def write_json(data: Any, path: Path) -> Path:
    """Save data to a JSON file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(data), f, indent=2)
    logger.info(f"Saved {path}")
    return path


def read_json(path: Path) -> Any:
    """Load JSON, wrapping IO and parse failures as ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read {path}: {e}") from e
