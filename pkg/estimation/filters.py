"""Continuous-discrete extended and linear Kalman filters.

The time update integrates the mean ODE and the covariance Lyapunov ODE as
one stacked RK4 system; the measurement update is the Joseph form. Both
filters share these routines and differ only in the ``StochasticModel``
they are handed: ``augment`` gives the nonlinear disturbance-augmented
model in absolute variables, ``linear_augment`` its linearization in
deviation variables.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from models.model_params import ModelParams
from plant.dynamics import LinearModel, StateLike, as_masses, drift, measure, state_jacobian
from plant.integrators import VectorField, integrate_rk4
from utils.errors import DomainError, FilterDivergenceError, IntegrationError

logger = logging.getLogger(__name__)

DEFAULT_P0_DIAG = (1e2, 1e2, 1e2, 1e2, 1e1, 1e1, 1e1, 1e1)
DEFAULT_RK4_STEPS = 10


@dataclass(frozen=True)
class GaussianBelief:
    """Filter mean and covariance (x̂, P)."""
    mean: np.ndarray
    cov: np.ndarray

    @property
    def masses(self) -> np.ndarray:
        return self.mean[:4]

    @property
    def disturbances(self) -> np.ndarray:
        return self.mean[4:]

    def is_consistent(self, sym_tol: float = 1e-10, psd_tol: float = -1e-8) -> bool:
        """Symmetric and positive semidefinite within tolerance."""
        P = self.cov
        if np.max(np.abs(P - P.T)) >= sym_tol:
            return False
        return bool(np.min(np.linalg.eigvalsh(P)) > psd_tol)


@dataclass(frozen=True)
class Innovation:
    """Innovation e, its covariance Re and the gain K of one measurement update.

    ``log_det`` and ``weighted`` are ln det Re and e' Re⁻¹ e, taken from the
    Cholesky factor the update already computed.
    """
    e: np.ndarray
    Re: np.ndarray
    K: np.ndarray
    log_det: float = float("nan")
    weighted: float = float("nan")


# Stacked moments Z = [x | P] of shape (n, n + 1) and the input held over the interval.
MomentField = Callable[[np.ndarray], VectorField]


@dataclass(frozen=True)
class StochasticModel:
    """dx = f(x, u) dt + diag(diffusion) dω,  y = g(x) + v,  v ~ N(0, meas_cov).

    ``moment_field`` optionally replaces the generic mean/covariance field
    built from ``drift`` and ``jacobian`` by one that exploits the model's
    structure; both must describe the same ODE.
    """
    drift: Callable[[np.ndarray, np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray, np.ndarray], np.ndarray]
    diffusion: np.ndarray
    output: Callable[[np.ndarray], np.ndarray]
    output_jacobian: Callable[[np.ndarray], np.ndarray]
    meas_cov: np.ndarray
    linear: bool = False
    moment_field: Optional[MomentField] = None

    @property
    def n_x(self) -> int:
        return len(self.diffusion)

    def moments_field(self, u: np.ndarray) -> VectorField:
        """d/dt [x | P] = [f(x, u) | A P + P A' + Q] with A = df/dx at the mean."""
        if self.moment_field is not None:
            return self.moment_field(u)
        process_cov = np.diag(np.asarray(self.diffusion, dtype=float) ** 2)

        def field(t, Z):
            x = Z[:, 0]
            out = np.empty_like(Z)
            out[:, 0] = self.drift(x, u)
            AP = self.jacobian(x, u) @ Z[:, 1:]
            np.add(AP, AP.T, out=out[:, 1:])
            out[:, 1:] += process_cov
            return out

        return field


# ---------------------------------------------------------------------------
# Model construction
# ---------------------------------------------------------------------------

# d(drift)/dm = rho (T - I) diag(dq/dm), T routing the top-tank outflows into the bottom tanks
_ROUTING = np.array([
    [-1.0, 0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, -1.0],
])


def _tank_moment_field(params: ModelParams) -> MomentField:
    """Mean/covariance field of the augmented tank model using its block structure.

    The Jacobian is [[A(m), rho I], [0, 0]]; only the 4x4 mass block changes
    along the trajectory, and the disturbance rows of the drift are zero.
    """
    drain = params.rho * _ROUTING
    k = params.outflow_coefficients
    half_k = 0.5 * k
    rho = params.rho
    process_cov = np.diag(np.concatenate([params.sigma, params.sigma_d]) ** 2)
    jac_template = np.zeros((8, 8))
    jac_template[:4, 4:] = rho * np.eye(4)

    def for_input(u: np.ndarray) -> VectorField:
        if not np.all(np.isfinite(u)):
            raise DomainError(f"non-finite input: {u}")
        inflow = params.input_matrix @ u
        J = jac_template.copy()

        def field(t, Z):
            root = np.sqrt(np.maximum(Z[:4, 0], 0.0))
            slope = np.divide(half_k, root, out=np.zeros(4), where=root > 0.0)
            J[:4, :4] = drain * slope
            out = np.empty_like(Z)
            out[:4, 0] = inflow + rho * Z[4:, 0] + drain @ (k * root)
            out[4:, 0] = 0.0
            JP = J @ Z[:, 1:]
            np.add(JP, JP.T, out=out[:, 1:])
            out[:, 1:] += process_cov
            return out

        return field

    return for_input


def augment(params: ModelParams) -> StochasticModel:
    """Four-tank model with integrating disturbances: x = [m; d], dd = σ_d dω_d."""
    params.validate()
    C = np.hstack([np.diag(params.level_scale), np.zeros((4, 4))])
    E = params.rho * np.eye(4)

    def f(x, u):
        return np.concatenate([drift(x[:4], u, x[4:], params), np.zeros(4)])

    def jac(x, u):
        J = np.zeros((8, 8))
        J[:4, :4] = state_jacobian(x[:4], params)
        J[:4, 4:] = E
        return J

    return StochasticModel(
        drift=f,
        jacobian=jac,
        diffusion=np.concatenate([params.sigma, params.sigma_d]),
        output=lambda x: measure(x[:4], params),
        output_jacobian=lambda x: C,
        meas_cov=params.meas_cov,
        moment_field=_tank_moment_field(params),
    )


def augmented_matrices(model: LinearModel) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """([[A, E], [0, 0]], [B; 0], [C, 0]) for the deviation-variable filter."""
    Aa = np.zeros((8, 8))
    Aa[:4, :4] = model.Amat
    Aa[:4, 4:] = model.Emat
    Ba = np.vstack([model.Bmat, np.zeros((4, 2))])
    Ca = np.hstack([model.Cmat, np.zeros((4, 4))])
    return Aa, Ba, Ca


def linear_augment(model: LinearModel, params: ModelParams) -> StochasticModel:
    """Augmented linear model in deviations from (x_s, u_s, d_s)."""
    Aa, Ba, Ca = augmented_matrices(model)
    return StochasticModel(
        drift=lambda X, U: Aa @ X + Ba @ U,
        jacobian=lambda X, U: Aa,
        diffusion=np.concatenate([params.sigma, params.sigma_d]),
        output=lambda X: Ca @ X,
        output_jacobian=lambda X: Ca,
        meas_cov=params.meas_cov,
        linear=True,
    )


def initial_belief(x0: StateLike, d0: Optional[Sequence[float]] = None,
                   p0_diag: Sequence[float] = DEFAULT_P0_DIAG) -> GaussianBelief:
    """Belief [x0; d0] with diagonal covariance."""
    d0 = np.zeros(4) if d0 is None else np.asarray(d0, dtype=float)
    mean = np.concatenate([as_masses(x0), d0])
    if len(p0_diag) != len(mean):
        raise DomainError(f"P0 diagonal needs {len(mean)} entries, got {len(p0_diag)}")
    return GaussianBelief(mean=mean, cov=np.diag(np.asarray(p0_diag, dtype=float)))


# ---------------------------------------------------------------------------
# Shared recursions
# ---------------------------------------------------------------------------

def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def _time_update(belief: GaussianBelief, u, T_s: float, model: StochasticModel,
                 steps: int) -> GaussianBelief:
    if T_s == 0:
        return belief
    field = model.moments_field(np.asarray(u, dtype=float))
    moments = np.column_stack([belief.mean, belief.cov])
    try:
        moments = integrate_rk4(field, moments, 0.0, T_s, steps)
    except IntegrationError as err:
        logger.warning("filter time update blew up at RK4 step %d", err.step)
        raise FilterDivergenceError(
            f"time update diverged at RK4 step {err.step} from mean {belief.mean}"
        ) from err
    return GaussianBelief(mean=moments[:, 0].copy(), cov=_symmetrize(moments[:, 1:]))


def _measurement_update(belief: GaussianBelief, y, model: StochasticModel
                        ) -> Tuple[GaussianBelief, Innovation]:
    x, P = belief.mean, belief.cov
    C = model.output_jacobian(x)
    R = model.meas_cov
    e = np.asarray(y, dtype=float) - model.output(x)
    CP = C @ P
    Re = R + CP @ C.T
    try:
        factor = cho_factor(Re, lower=True, check_finite=False)
    except LinAlgError as err:
        raise FilterDivergenceError(f"innovation covariance is not positive definite: {Re}") from err
    if not np.all(np.isfinite(factor[0])):
        raise FilterDivergenceError(f"innovation covariance is not finite: {Re}")
    K = cho_solve(factor, CP, check_finite=False).T

    IKC = np.eye(len(x)) - K @ C
    cov = _symmetrize(IKC @ P @ IKC.T + K @ R @ K.T)
    mean = x + K @ e
    if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
        raise FilterDivergenceError(f"non-finite posterior after innovation {e}")
    innovation = Innovation(
        e=e, Re=Re, K=K,
        log_det=2.0 * float(np.sum(np.log(np.diag(factor[0])))),
        weighted=float(e @ cho_solve(factor, e, check_finite=False)),
    )
    return GaussianBelief(mean=mean, cov=cov), innovation


# ---------------------------------------------------------------------------
# Public filter steps
# ---------------------------------------------------------------------------

def ekf_time_update(belief: GaussianBelief, u, T_s: float, model: StochasticModel,
                    steps: int = DEFAULT_RK4_STEPS) -> GaussianBelief:
    """Predict over [t, t+T_s) with A re-evaluated along the mean trajectory."""
    return _time_update(belief, u, T_s, model, steps)


def ekf_measurement_update(belief: GaussianBelief, y, model: StochasticModel
                           ) -> Tuple[GaussianBelief, Innovation]:
    return _measurement_update(belief, y, model)


def _require_linear(model: StochasticModel) -> None:
    if not model.linear:
        raise DomainError("the linear Kalman filter needs a model from linear_augment")


def kf_time_update(belief: GaussianBelief, U, T_s: float, model: StochasticModel,
                   steps: int = DEFAULT_RK4_STEPS) -> GaussianBelief:
    """Linear time update; ``belief`` and ``U`` are deviations from the operating point."""
    _require_linear(model)
    return _time_update(belief, U, T_s, model, steps)


def kf_measurement_update(belief: GaussianBelief, Y, model: StochasticModel
                          ) -> Tuple[GaussianBelief, Innovation]:
    """Linear measurement update with Y = y - y_s."""
    _require_linear(model)
    return _measurement_update(belief, Y, model)
