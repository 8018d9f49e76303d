"""Stochastic plant simulation (Euler-Maruyama) and noise-free reference runs."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.model_params import ModelParams
from plant.dynamics import StateLike, as_masses, drift, measure
from plant.integrators import integrate_rk4
from utils.errors import DomainError


@dataclass(frozen=True)
class PlantTrajectory:
    """Sampled plant run: K+1 samples of time, true masses and levels."""
    t: np.ndarray
    m: np.ndarray
    y: np.ndarray

    @property
    def samples(self) -> int:
        return len(self.t)


def _expand_schedule(schedule, intervals: int, width: int, name: str) -> np.ndarray:
    """Turn a constant vector or a per-interval array into shape (intervals, width)."""
    if schedule is None:
        return np.zeros((intervals, width))
    values = np.asarray(schedule, dtype=float)
    if values.ndim == 1:
        values = np.broadcast_to(values, (intervals, width))
    if values.shape[0] < intervals or values.shape[1] != width:
        raise DomainError(
            f"{name} schedule has shape {values.shape}, needs ({intervals}, {width})"
        )
    return values[:intervals]


def plant_step(m: np.ndarray, u, d, params: ModelParams, T_s: float, substeps: int,
               rng: Optional[np.random.Generator], noise_free: bool = False) -> np.ndarray:
    """Advance the true masses over one hold interval [t, t+T_s).

    Euler-Maruyama with dt = T_s/substeps, reflected at zero mass.
    """
    if substeps < 1:
        raise DomainError(f"substeps must be >= 1, got {substeps}")
    dt = T_s / substeps
    sigma = np.asarray(params.sigma)
    m = np.asarray(m, dtype=float)
    if noise_free:
        for _ in range(substeps):
            m = np.maximum(0.0, m + drift(m, u, d, params) * dt)
        return m
    xi = rng.standard_normal((substeps, 4))
    scale = sigma * np.sqrt(dt)
    for j in range(substeps):
        m = np.maximum(0.0, m + drift(m, u, d, params) * dt + scale * xi[j])
    return m


def measure_noisy(m: np.ndarray, params: ModelParams,
                  rng: Optional[np.random.Generator], noise_free: bool = False) -> np.ndarray:
    """Levels plus N(0, diag(r2)) sensor noise."""
    y = measure(m, params)
    if noise_free:
        return y
    return y + np.sqrt(params.r2) * rng.standard_normal(4)


def simulate_plant(x0: StateLike, inputs, disturbances, params: ModelParams,
                   T_s: float, substeps: int = 10, seed: int = 0,
                   noise_free: bool = False,
                   rng: Optional[np.random.Generator] = None,
                   sensor_rng: Optional[np.random.Generator] = None) -> PlantTrajectory:
    """Simulate the stochastic plant under zero-order-hold schedules.

    ``inputs`` has one row per hold interval (K rows give K+1 samples).
    ``disturbances`` is a constant 4-vector, a per-interval array, or None.
    The same seed reproduces the same trajectory bit for bit. Passing
    ``rng`` and ``sensor_rng`` keeps process and measurement noise on
    separate streams.
    """
    params.validate()
    u = np.asarray(inputs, dtype=float)
    if u.ndim != 2 or u.shape[1] != 2:
        raise DomainError(f"inputs must have shape (K, 2), got {u.shape}")
    intervals = u.shape[0]
    d = _expand_schedule(disturbances, intervals, 4, "disturbance")
    if rng is None:
        rng = np.random.default_rng(seed)
    if sensor_rng is None:
        sensor_rng = rng

    m = np.empty((intervals + 1, 4))
    y = np.empty((intervals + 1, 4))
    m[0] = as_masses(x0)
    y[0] = measure_noisy(m[0], params, sensor_rng, noise_free)
    for k in range(intervals):
        m[k + 1] = plant_step(m[k], u[k], d[k], params, T_s, substeps, rng, noise_free)
        y[k + 1] = measure_noisy(m[k + 1], params, sensor_rng, noise_free)
    t = T_s * np.arange(intervals + 1)
    return PlantTrajectory(t=t, m=m, y=y)


def simulate_deterministic(x0: StateLike, inputs, disturbances, params: ModelParams,
                           T_s: float, rk4_steps: int = 10) -> PlantTrajectory:
    """Noise-free RK4 run of the model; the reference ỹ for goodness of fit."""
    u = np.asarray(inputs, dtype=float)
    intervals = u.shape[0]
    d = _expand_schedule(disturbances, intervals, 4, "disturbance")
    m = np.empty((intervals + 1, 4))
    m[0] = as_masses(x0)
    for k in range(intervals):
        uk, dk = u[k], d[k]
        m[k + 1] = integrate_rk4(lambda t, x: drift(x, uk, dk, params),
                                 m[k], 0.0, T_s, rk4_steps)
    t = T_s * np.arange(intervals + 1)
    return PlantTrajectory(t=t, m=m, y=measure(m, params))
