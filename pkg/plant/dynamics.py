"""Nonlinear quadruple-tank model: flows, mass balances, outputs, linearization.

Every function accepts a single state of shape (4,) or a batch of shape
(..., 4); batches are what the multiple-shooting controller integrates.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from models.model_params import ModelParams
from utils.errors import DomainError, SteadyStateError


@dataclass(frozen=True)
class PlantState:
    """Water mass per tank [g] at time t [s]."""
    m: np.ndarray
    t: float = 0.0


StateLike = Union[PlantState, np.ndarray, tuple, list]


def as_masses(x: StateLike) -> np.ndarray:
    """Return the mass vector of a PlantState or array-like as a float array."""
    return np.asarray(x.m if isinstance(x, PlantState) else x, dtype=float)


@dataclass(frozen=True)
class LinearModel:
    """Jacobians of the mass balances at an operating point (deviation form)."""
    x_s: np.ndarray
    u_s: np.ndarray
    d_s: np.ndarray
    Amat: np.ndarray
    Bmat: np.ndarray
    Emat: np.ndarray
    Cmat: np.ndarray
    Czmat: np.ndarray

    @property
    def z_s(self) -> np.ndarray:
        return self.Czmat @ self.x_s

    @property
    def y_s(self) -> np.ndarray:
        return self.Cmat @ self.x_s


# ---------------------------------------------------------------------------
# Flows and mass balances
# ---------------------------------------------------------------------------

def outflow(m, a, A, params: ModelParams):
    """Torricelli outflow a*sqrt(2 g_a h) with h = m/(rho A) [cm3/s]."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 0):
        raise DomainError(f"outflow needs non-negative mass, got {m}")
    return a * np.sqrt(2.0 * params.g_a * m / (params.rho * np.asarray(A, dtype=float)))


def _check_finite(**arrays) -> None:
    for name, value in arrays.items():
        if not np.all(np.isfinite(value)):
            raise DomainError(f"non-finite {name}: {value}")


def drift(x: StateLike, u, d, params: ModelParams) -> np.ndarray:
    """Mass balance rho*(q_in - q_out) per tank [g/s].

    Masses are clamped at zero before the square root so the field is defined
    on the empty-tank boundary.
    """
    m = as_masses(x)
    u = np.asarray(u, dtype=float)
    d = np.asarray(d, dtype=float)
    _check_finite(state=m, input=u, disturbance=d)

    q_out = params.outflow_coefficients * np.sqrt(np.maximum(m, 0.0))
    g1, g2 = params.gamma
    u1, u2 = u[..., 0], u[..., 1]
    q_in = np.stack([
        g1 * u1 + d[..., 0] + q_out[..., 2],
        g2 * u2 + d[..., 1] + q_out[..., 3],
        (1.0 - g2) * u2 + d[..., 2],
        (1.0 - g1) * u1 + d[..., 3],
    ], axis=-1)
    return params.rho * (q_in - q_out)


def state_jacobian(x: StateLike, params: ModelParams) -> np.ndarray:
    """d(drift)/dm, shape (..., 4, 4).

    Entries of clamped (non-positive) masses are zero, matching the clamp in
    ``drift``.
    """
    m = as_masses(x)
    positive = m > 0
    safe = np.where(positive, m, 1.0)
    # d q_out / d m = k / (2 sqrt(m))
    dq = np.where(positive, params.outflow_coefficients / (2.0 * np.sqrt(safe)), 0.0)
    dq = params.rho * dq

    jac = np.zeros(m.shape + (4,))
    for i in range(4):
        jac[..., i, i] = -dq[..., i]
    jac[..., 0, 2] = dq[..., 2]
    jac[..., 1, 3] = dq[..., 3]
    return jac


def measure(x: StateLike, params: ModelParams) -> np.ndarray:
    """Noise-free levels y_i = m_i/(rho A_i) [cm]."""
    return as_masses(x) * params.level_scale


def cv_output(x: StateLike, params: ModelParams) -> np.ndarray:
    """Controlled variables: the two bottom-tank levels [cm]."""
    return measure(x, params)[..., :2]


def measurement_matrix(params: ModelParams) -> np.ndarray:
    return np.diag(params.level_scale)


# ---------------------------------------------------------------------------
# Operating point and linearization
# ---------------------------------------------------------------------------

def steady_state(u_s, d_s, params: ModelParams) -> PlantState:
    """Solve 0 = f(x_s, u_s, d_s) by the tank cascade.

    The top tanks only see pump flow and disturbance; their outflow then feeds
    the bottom tanks. Each level follows from q_out = q_in:
    h = (q_in/a)^2 / (2 g_a).
    """
    u1, u2 = (float(v) for v in u_s)
    d = np.asarray(d_s, dtype=float)
    g1, g2 = params.gamma

    q_in = np.zeros(4)
    q_in[2] = (1.0 - g2) * u2 + d[2]
    q_in[3] = (1.0 - g1) * u1 + d[3]
    q_in[0] = g1 * u1 + d[0] + q_in[2]
    q_in[1] = g2 * u2 + d[1] + q_in[3]
    for tank in (2, 3, 0, 1):
        if q_in[tank] <= 0:
            raise SteadyStateError(tank + 1, q_in[tank])

    h = (q_in / params.a_vec) ** 2 / (2.0 * params.g_a)
    return PlantState(m=params.rho * params.A_vec * h)


def linearize(x_s: StateLike, u_s, d_s, params: ModelParams) -> LinearModel:
    """Analytic Jacobians (A, B, E) of the mass balances at an interior point."""
    m = as_masses(x_s)
    if np.any(m <= 0):
        raise DomainError(f"singular linearization: empty tank in operating point {m}")
    C = measurement_matrix(params)
    return LinearModel(
        x_s=m.copy(),
        u_s=np.asarray(u_s, dtype=float).copy(),
        d_s=np.asarray(d_s, dtype=float).copy(),
        Amat=state_jacobian(m, params),
        Bmat=params.input_matrix.copy(),
        Emat=params.rho * np.eye(4),
        Cmat=C,
        Czmat=C[:2, :].copy(),
    )


def operating_point(u_s, d_s, params: ModelParams) -> Tuple[PlantState, LinearModel]:
    """Steady state and its linearization in one call."""
    x_s = steady_state(u_s, d_s, params)
    return x_s, linearize(x_s, u_s, d_s, params)
