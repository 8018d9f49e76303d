"""IMC-tuned PID loops with filtered derivative and back-calculation anti-windup."""

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from plant.transfer import SecondOrderTF
from utils.errors import DomainError, UntunableError

DERIVATIVE_FILTER = 10.0


@dataclass(frozen=True)
class PidGains:
    """Parallel-form gains: u = u_bias + Kp (e + (1/τi)∫e - τd dy/dt)."""
    Kp: float
    tau_i: float
    tau_d: float
    T_c: float
    u_bias: float = 0.0
    N_f: float = DERIVATIVE_FILTER

    def __post_init__(self):
        if not self.tau_i > 0:
            raise DomainError(f"tau_i must be positive, got {self.tau_i}")
        if self.tau_d < 0:
            raise DomainError(f"tau_d must be non-negative, got {self.tau_d}")

    @property
    def tracking_time(self) -> float:
        """Anti-windup tracking time τt = √(τi τd), or τi for a PI loop."""
        if self.tau_d == 0:
            return self.tau_i
        return math.sqrt(self.tau_i * self.tau_d)

    def with_bias(self, u_bias: float) -> "PidGains":
        return replace(self, u_bias=float(u_bias))


@dataclass(frozen=True)
class PidLoopState:
    integral: float = 0.0
    derivative: float = 0.0
    prev_y: Optional[float] = None
    prev_error: Optional[float] = None


def imc_tune(tf: SecondOrderTF, T_c: float, u_bias: float = 0.0) -> PidGains:
    """Series IMC rules for k/((τ1 s+1)(τ2 s+1)), converted to parallel form."""
    if T_c <= 0:
        raise DomainError(f"closed-loop time constant T_c must be positive, got {T_c}")
    if tf.k == 0:
        raise UntunableError("zero steady-state gain; the loop cannot be tuned")
    kp_series = tf.tau1 / (tf.k * T_c)
    ti_series = min(tf.tau1, 4.0 * T_c)
    td_series = tf.tau2
    alpha = 1.0 + td_series / ti_series
    return PidGains(
        Kp=kp_series * alpha,
        tau_i=ti_series * alpha,
        tau_d=td_series / alpha,
        T_c=T_c,
        u_bias=u_bias,
    )


def pid_step(state: PidLoopState, y: float, zbar: float, gains: PidGains, T_s: float,
             bounds: Tuple[float, float]) -> Tuple[float, PidLoopState]:
    """One sample of the discrete PID; returns the saturated input and next state."""
    lb, ub = bounds
    if not lb < ub:
        raise DomainError(f"input bounds must satisfy lb < ub, got {bounds}")
    y = float(y)
    e = float(zbar) - y
    prev_y = y if state.prev_y is None else state.prev_y
    prev_e = e if state.prev_error is None else state.prev_error

    # trapezoidal integral over [t-T_s, t]
    integral = state.integral + gains.Kp * T_s / gains.tau_i * 0.5 * (e + prev_e)

    # derivative on measurement only, first-order filter τd/N_f
    if gains.tau_d > 0:
        tf = gains.tau_d / gains.N_f
        derivative = (tf * state.derivative - gains.Kp * gains.tau_d * (y - prev_y)) / (tf + T_s)
    else:
        derivative = 0.0

    u_raw = gains.u_bias + gains.Kp * e + integral + derivative
    u = min(max(u_raw, lb), ub)
    # back-calculation; gain capped at 1 so the correction never overshoots
    integral += min(T_s / gains.tracking_time, 1.0) * (u - u_raw)

    return u, PidLoopState(integral=integral, derivative=derivative, prev_y=y, prev_error=e)


class PidController:
    """Two decentralized loops: y1/z̄1 drive u2 and y2/z̄2 drive u1.

    Each tank is fed by the opposite pump through the upper tank, which is
    the dominant path when γ1 + γ2 < 1.
    """

    name = "pid"
    uses_preview = False

    def __init__(self, gains_u1: PidGains, gains_u2: PidGains, T_s: float,
                 bounds: Tuple[float, float]):
        self.gains = (gains_u1, gains_u2)
        self.T_s = T_s
        self.bounds = bounds
        self.states = (PidLoopState(), PidLoopState())

    def step(self, y: Sequence[float], zbar_horizon: np.ndarray, belief=None) -> np.ndarray:
        zbar = np.asarray(zbar_horizon, dtype=float)
        zbar_now = zbar[0] if zbar.ndim == 2 else zbar
        u1, s1 = pid_step(self.states[0], y[1], zbar_now[1], self.gains[0], self.T_s, self.bounds)
        u2, s2 = pid_step(self.states[1], y[0], zbar_now[0], self.gains[1], self.T_s, self.bounds)
        self.states = (s1, s2)
        return np.array([u1, u2])
