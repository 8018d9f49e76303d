"""Stateful estimator objects used by the closed loop.

Each wraps one filter's pure update functions and keeps the current belief.
Both expose the estimate in absolute units so controllers can consume either.
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from estimation.filters import (
    DEFAULT_P0_DIAG,
    DEFAULT_RK4_STEPS,
    GaussianBelief,
    Innovation,
    augment,
    ekf_measurement_update,
    ekf_time_update,
    initial_belief,
    kf_measurement_update,
    kf_time_update,
    linear_augment,
)
from models.model_params import ModelParams
from plant.dynamics import LinearModel, StateLike, as_masses


class ExtendedKalmanEstimator:
    """CD-EKF on the nonlinear augmented model."""

    name = "ekf"

    def __init__(self, params: ModelParams, x0: StateLike,
                 d0: Optional[Sequence[float]] = None,
                 p0_diag: Sequence[float] = DEFAULT_P0_DIAG,
                 rk4_steps: int = DEFAULT_RK4_STEPS):
        self.model = augment(params)
        self.rk4_steps = rk4_steps
        self.belief = initial_belief(x0, d0, p0_diag)
        self.last_innovation: Optional[Innovation] = None

    def measurement_update(self, y) -> Innovation:
        self.belief, self.last_innovation = ekf_measurement_update(self.belief, y, self.model)
        return self.last_innovation

    def time_update(self, u, T_s: float) -> None:
        self.belief = ekf_time_update(self.belief, u, T_s, self.model, self.rk4_steps)

    @property
    def absolute_belief(self) -> GaussianBelief:
        return self.belief

    @property
    def estimate(self) -> Tuple[np.ndarray, np.ndarray]:
        """(x̂, d̂) in g and cm³/s."""
        return self.belief.mean[:4].copy(), self.belief.mean[4:].copy()


class LinearKalmanEstimator:
    """CD-KF on the linearization; works internally in deviation variables."""

    name = "kf"

    def __init__(self, linear_model: LinearModel, params: ModelParams,
                 x0: Optional[StateLike] = None,
                 d0: Optional[Sequence[float]] = None,
                 p0_diag: Sequence[float] = DEFAULT_P0_DIAG,
                 rk4_steps: int = DEFAULT_RK4_STEPS):
        self.linear_model = linear_model
        self.model = linear_augment(linear_model, params)
        self.rk4_steps = rk4_steps
        self.offset = np.concatenate([linear_model.x_s, linear_model.d_s])
        start = linear_model.x_s if x0 is None else as_masses(x0)
        d_start = linear_model.d_s if d0 is None else np.asarray(d0, dtype=float)
        self.belief = initial_belief(start - linear_model.x_s, d_start - linear_model.d_s, p0_diag)
        self.last_innovation: Optional[Innovation] = None

    def measurement_update(self, y) -> Innovation:
        Y = np.asarray(y, dtype=float) - self.linear_model.y_s
        self.belief, self.last_innovation = kf_measurement_update(self.belief, Y, self.model)
        return self.last_innovation

    def time_update(self, u, T_s: float) -> None:
        U = np.asarray(u, dtype=float) - self.linear_model.u_s
        self.belief = kf_time_update(self.belief, U, T_s, self.model, self.rk4_steps)

    @property
    def absolute_belief(self) -> GaussianBelief:
        return GaussianBelief(mean=self.belief.mean + self.offset, cov=self.belief.cov)

    @property
    def estimate(self) -> Tuple[np.ndarray, np.ndarray]:
        mean = self.belief.mean + self.offset
        return mean[:4], mean[4:]
