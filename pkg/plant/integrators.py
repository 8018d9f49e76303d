"""Fixed-step classical Runge-Kutta integration."""

from typing import Callable

import numpy as np

from utils.errors import DomainError, IntegrationError

VectorField = Callable[[float, np.ndarray], np.ndarray]


def integrate_rk4(field: VectorField, x0, t0: float, t1: float, steps: int) -> np.ndarray:
    """Integrate dx/dt = field(t, x) from t0 to t1 with ``steps`` RK4 steps.

    ``x0`` may have any shape; ``field`` must return an array of the same
    shape. Integrating stacked systems (mean plus covariance, state plus
    sensitivities) relies on this.
    """
    if steps < 1:
        raise DomainError(f"RK4 needs at least one step, got {steps}")
    if t1 < t0:
        raise DomainError(f"RK4 interval runs backwards: [{t0}, {t1}]")
    x = np.array(x0, dtype=float)
    if t1 == t0:
        return x

    h = (t1 - t0) / steps
    t = t0
    for step in range(steps):
        k1 = field(t, x)
        k2 = field(t + 0.5 * h, x + 0.5 * h * k1)
        k3 = field(t + 0.5 * h, x + 0.5 * h * k2)
        k4 = field(t + h, x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(step)
        t = t0 + (step + 1) * h
    return x
