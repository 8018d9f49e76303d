"""Shared fixtures: presets, the default operating point and small configs."""

import numpy as np
import pytest

from models.presets import ESTIMATED, FILTER_TUNING, NOMINAL
from models.run_config import RunConfig
from plant.dynamics import operating_point

U_S = np.array([300.0, 300.0])
D_S = np.zeros(4)


@pytest.fixture
def nominal():
    return NOMINAL


@pytest.fixture
def estimated():
    return ESTIMATED


@pytest.fixture
def tuning():
    return FILTER_TUNING


@pytest.fixture
def u_s():
    return U_S.copy()


@pytest.fixture
def d_s():
    return D_S.copy()


@pytest.fixture
def operating():
    """(x_s, LinearModel) of the estimated plant at u_s = (300, 300)."""
    return operating_point(U_S, D_S, ESTIMATED)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def short_config(tmp_path):
    """Short noisy LMPC run with a small horizon, writing into tmp_path."""
    config = RunConfig(seed=11, controller="lmpc", duration=200.0, output_dir=str(tmp_path))
    config.mpc.N_c = 20
    return config
