"""Random step excitation of the pumps and open-loop identification datasets."""

from typing import Optional, Tuple

import numpy as np

from models.dataset import Dataset
from models.model_params import ModelParams
from plant.dynamics import steady_state
from plant.simulator import simulate_plant
from utils.errors import DomainError
from utils.seeding import component_rng

DEFAULT_HOLD_RANGE = (12, 60)
DEFAULT_LEVEL_RANGE = (200.0, 330.0)
DEFAULT_BOUNDS = (160.0, 350.0)


def sample_count(duration: float, T_s: float) -> int:
    """Samples in [0, duration] at T_s: duration/T_s + 1."""
    intervals = duration / T_s
    if intervals < 1 or abs(intervals - round(intervals)) > 1e-9:
        raise DomainError(f"duration {duration} s is not a positive multiple of T_s={T_s} s")
    return int(round(intervals)) + 1


def generate_excitation(seed: int, T_s: float, duration: float,
                        hold_range: Tuple[int, int] = DEFAULT_HOLD_RANGE,
                        level_range: Tuple[float, float] = DEFAULT_LEVEL_RANGE,
                        bounds: Tuple[float, float] = DEFAULT_BOUNDS,
                        rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Independent piecewise-constant random steps per pump.

    Returns one row per sample (duration/T_s + 1 rows). Holds are drawn
    uniformly from ``hold_range`` samples (inclusive), levels uniformly from
    ``level_range``.
    """
    lo_hold, hi_hold = (int(v) for v in hold_range)
    lo_level, hi_level = (float(v) for v in level_range)
    if lo_hold < 1 or hi_hold < lo_hold:
        raise DomainError(f"hold range must satisfy 1 <= low <= high, got {hold_range}")
    if not bounds[0] <= lo_level <= hi_level <= bounds[1]:
        raise DomainError(f"level range {level_range} must lie within the input bounds {bounds}")

    n = sample_count(duration, T_s)
    if rng is None:
        rng = component_rng(seed, "excitation")
    U = np.empty((n, 2))
    for pump in range(2):
        k = 0
        while k < n:
            hold = int(rng.integers(lo_hold, hi_hold + 1))
            U[k:k + hold, pump] = rng.uniform(lo_level, hi_level)
            k += hold
    return U


def excitation_dataset(params: ModelParams, seed: int, T_s: float, duration: float,
                       hold_range: Tuple[int, int] = DEFAULT_HOLD_RANGE,
                       level_range: Tuple[float, float] = DEFAULT_LEVEL_RANGE,
                       substeps: int = 10, noise_free: bool = False,
                       disturbance=None,
                       bounds: Tuple[float, float] = DEFAULT_BOUNDS) -> Dataset:
    """Excite, simulate and package an identification dataset.

    The plant starts at the steady state of the first input level.
    """
    U = generate_excitation(seed, T_s, duration, hold_range, level_range, bounds)
    x0 = steady_state(U[0], np.zeros(4), params)
    trajectory = simulate_plant(
        x0, U[:-1], disturbance, params, T_s, substeps=substeps, noise_free=noise_free,
        rng=component_rng(seed, "plant"), sensor_rng=component_rng(seed, "sensor"),
    )
    return Dataset(t=trajectory.t, Y=trajectory.y, U=U).validate()
