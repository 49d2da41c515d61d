"""Recorded sampling trajectories and their JSON form."""
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from config import TIME_MATCH_TOL
from diffusion.grid import TimeGrid
from utils.errors import ConfigError, ContractError
from utils.helpers import read_json, write_json


class Kind(str, Enum):
    ODE = "ode"
    SDE = "sde"


@dataclass(eq=False)
class Trajectory:
    """
    States on an ascending grid: states[i] is x at grid.times[i], so states[-1]
    is the initial latent at t = 1 and states[0] the sample at t_eps.

    Per-step arrays are indexed by step i, the move from t_{i+1} down to t_i:
    eps_outputs[i] = eps(x_{t_{i+1}}, z_i, t_{i+1}) and noise_seq[i] is the
    draw injected on that step.
    """

    grid: TimeGrid
    kind: Kind
    states: np.ndarray
    z_record: np.ndarray
    eps_outputs: Optional[np.ndarray] = None
    noise_seq: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        self.kind = Kind(self.kind)
        self.states = np.asarray(self.states, dtype=np.float64)
        self.z_record = np.asarray(self.z_record, dtype=np.float64)
        n = self.grid.n_steps
        if self.states.ndim != 2 or self.states.shape[0] != n + 1:
            raise ContractError(f"Expected {n + 1} states, got shape {self.states.shape}")
        if self.eps_outputs is not None:
            self.eps_outputs = np.asarray(self.eps_outputs, dtype=np.float64)
            if self.eps_outputs.shape != (n, self.dim):
                raise ContractError(f"eps_outputs must have shape ({n}, {self.dim})")
        if self.noise_seq is not None:
            self.noise_seq = np.asarray(self.noise_seq, dtype=np.float64)
            if self.noise_seq.shape != (n, self.dim):
                raise ContractError(f"noise_seq must have shape ({n}, {self.dim})")
        if self.kind == Kind.SDE and self.noise_seq is None:
            raise ContractError("SDE trajectories must carry their noise sequence")

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def x_init(self) -> np.ndarray:
        return self.states[-1]

    @property
    def x_final(self) -> np.ndarray:
        return self.states[0]

    def state_at(self, t: float) -> np.ndarray:
        """Recorded state at t; piecewise-linear in t between grid points."""
        times = self.grid.times
        if t < times[0] - TIME_MATCH_TOL or t > times[-1] + TIME_MATCH_TOL:
            raise ContractError(f"t={t} outside recorded span [{times[0]}, {times[-1]}]")
        idx = int(np.searchsorted(times, t))
        for k in (idx - 1, idx):
            if 0 <= k < len(times) and abs(times[k] - t) <= TIME_MATCH_TOL:
                return self.states[k]
        lo, hi = idx - 1, idx
        w = (t - times[lo]) / (times[hi] - times[lo])
        return (1.0 - w) * self.states[lo] + w * self.states[hi]

    # ---------------------------------------------------------------- io

    def to_dict(self) -> dict:
        data = {
            "grid": self.grid.times.tolist(),
            "spacing": self.grid.spacing.value,
            "kind": self.kind.value,
            "states": self.states.tolist(),
            "z_record": self.z_record.tolist(),
            "seed": self.seed,
        }
        if self.eps_outputs is not None:
            data["eps_outputs"] = self.eps_outputs.tolist()
        if self.noise_seq is not None:
            data["noise_seq"] = self.noise_seq.tolist()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Trajectory":
        try:
            grid = TimeGrid.from_dict({"times": data["grid"], "spacing": data.get("spacing", "explicit")})
            return cls(
                grid=grid,
                kind=Kind(data["kind"]),
                states=np.asarray(data["states"], dtype=np.float64),
                z_record=np.asarray(data["z_record"], dtype=np.float64),
                eps_outputs=None if data.get("eps_outputs") is None else np.asarray(data["eps_outputs"]),
                noise_seq=None if data.get("noise_seq") is None else np.asarray(data["noise_seq"]),
                seed=data.get("seed"),
            )
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError(f"Invalid trajectory data: {e}") from e

    def save(self, path: Path) -> Path:
        return write_json(self.to_dict(), path)

    @classmethod
    def load(cls, path: Path) -> "Trajectory":
        return cls.from_dict(read_json(path))
