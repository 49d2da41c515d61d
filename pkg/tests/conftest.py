"""Shared fixtures; puts src/ on sys.path like the entry point does."""
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from diffusion.grid import Spacing, make_grid  # noqa: E402
from diffusion.schedule import VpSchedule  # noqa: E402
from models import AnalyticGaussianModel, TinyMlpModel, ZeroModel  # noqa: E402


@pytest.fixture
def schedule():
    return VpSchedule()


@pytest.fixture
def gaussian(schedule):
    return AnalyticGaussianModel(schedule, mu=[0.5, -1.0], c=1.5)


@pytest.fixture
def mlp(schedule):
    return TinyMlpModel(schedule, d=2, dim_z=2, seed=3)


@pytest.fixture
def zero_model(schedule):
    return ZeroModel(schedule, d=2, dim_z=2)


@pytest.fixture
def zero_mlp(schedule):
    return TinyMlpModel.zeros(schedule, d=2, dim_z=2)


@pytest.fixture
def grid16(schedule):
    return make_grid(schedule, 16, Spacing.UNIFORM_T)


@pytest.fixture
def rng():
    return np.random.default_rng(42)
