"""Linear and nonlinear model predictive control on box-constrained inputs.

Both controllers minimize

    Σ_{k=1..N} ‖z_k - z̄_k‖²_Q + Σ_{k=0..N-1} ‖Δu_k‖²_S,   lb <= u_k <= ub

with Δu_0 = u_0 - (last applied input) and the disturbance estimate d̂ held
constant over the horizon. The LMPC predicts with the exact ZOH
discretization of the linearization; the NMPC uses multiple shooting on the
nonlinear model and solves the problem by Gauss-Newton SQP.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from control.condensing import extend_preview, free_response, prediction_matrices, tracking_qp
from control.discretize import zoh_discretize
from control.qp import qp_solve
from estimation.filters import GaussianBelief
from models.model_params import ModelParams
from plant.dynamics import LinearModel, drift, measurement_matrix, state_jacobian
from plant.integrators import integrate_rk4
from utils.errors import DomainError, IntegrationError, QPError

logger = logging.getLogger(__name__)

ARMIJO = 1e-4
BACKTRACK = 0.5
MAX_HALVINGS = 30


@dataclass
class MpcConfig:
    Q: np.ndarray = field(default_factory=lambda: np.diag([10.0, 10.0]))
    S: np.ndarray = field(default_factory=lambda: np.diag([1.0, 1.0]))
    N_c: int = 160
    T_s: float = 5.0
    bounds: Tuple[float, float] = (160.0, 350.0)
    rk4_steps: int = 10
    max_sqp_iterations: int = 30
    step_tolerance: float = 1e-6

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.S = np.atleast_2d(np.asarray(self.S, dtype=float))

    def validate(self) -> "MpcConfig":
        for name, W in (("Q", self.Q), ("S", self.S)):
            if W.shape[0] != W.shape[1] or np.max(np.abs(W - W.T)) > 1e-12:
                raise DomainError(f"{name} must be a symmetric square matrix")
            if np.min(np.linalg.eigvalsh(W)) < -1e-12:
                raise DomainError(f"{name} must be positive semidefinite")
        if self.N_c < 1:
            raise DomainError(f"horizon N_c must be >= 1, got {self.N_c}")
        if self.T_s <= 0:
            raise DomainError(f"T_s must be positive, got {self.T_s}")
        lb, ub = self.bounds
        if not (np.isfinite(lb) and np.isfinite(ub) and lb < ub):
            raise DomainError(f"input bounds must be finite with lb < ub, got {self.bounds}")
        return self

    def box(self, nu: int, offset=0.0) -> Tuple[np.ndarray, np.ndarray]:
        """Stacked horizon bounds, shifted by ``offset`` (per input)."""
        lb = np.tile(self.bounds[0] - np.broadcast_to(offset, (nu,)), self.N_c)
        ub = np.tile(self.bounds[1] - np.broadcast_to(offset, (nu,)), self.N_c)
        return lb, ub


@dataclass
class OcpSolution:
    """Planned inputs u_0..u_{N-1} and predicted CVs z_1..z_N, absolute units."""
    inputs: np.ndarray
    predicted_cv: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool = True
    merit_history: List[Tuple[float, float]] = field(default_factory=list)
    shooting_states: Optional[np.ndarray] = None


def _shift(rows: np.ndarray) -> np.ndarray:
    return np.vstack([rows[1:], rows[-1:]])


def future_setpoints(preview) -> np.ndarray:
    """Drop the current row of a closed-loop preview z̄(t), z̄(t+T_s), ..."""
    preview = np.atleast_2d(np.asarray(preview, dtype=float))
    return preview[1:] if len(preview) > 1 else preview


# ---------------------------------------------------------------------------
# Linear MPC
# ---------------------------------------------------------------------------

class DiscreteLinearModel:
    """ZOH model of a linearization with per-horizon prediction matrices cached."""

    def __init__(self, linear: LinearModel, T_s: float):
        self.linear = linear
        self.T_s = T_s
        self.Ad, self.Bd, self.Ed = zoh_discretize(linear, T_s)
        self._output_prediction: Dict[int, np.ndarray] = {}

    @property
    def n_x(self) -> int:
        return self.Ad.shape[0]

    def output_prediction(self, N: int) -> np.ndarray:
        """Gz mapping stacked input deviations to stacked z_1..z_N deviations."""
        if N not in self._output_prediction:
            Gamma = prediction_matrices(np.broadcast_to(self.Ad, (N,) + self.Ad.shape),
                                        np.broadcast_to(self.Bd, (N,) + self.Bd.shape))
            Gz = np.einsum("ij,kjm->kim", self.linear.Czmat, Gamma)
            self._output_prediction[N] = Gz.reshape(N * Gz.shape[1], -1)
        return self._output_prediction[N]


def lmpc_step(belief: GaussianBelief, zbar_horizon, cfg: MpcConfig,
              model: DiscreteLinearModel, u_prev,
              warm_start: Optional[np.ndarray] = None) -> Tuple[np.ndarray, OcpSolution]:
    """One LMPC move from a deviation-variable belief [X; D].

    ``zbar_horizon`` and ``u_prev`` are absolute; so are the returned input
    and plan. ``warm_start`` is a stacked input-deviation guess for the QP.
    """
    lin = model.linear
    N = cfg.N_c
    nx = model.n_x
    nu = lin.Bmat.shape[1]
    nz = lin.Czmat.shape[0]
    X0 = belief.mean[:nx]
    D_hat = belief.mean[nx:]

    zref = (extend_preview(zbar_horizon, N) - lin.z_s).ravel()
    A_seq = np.broadcast_to(model.Ad, (N, nx, nx))
    f_seq = np.broadcast_to(model.Ed @ D_hat, (N, nx))
    w = free_response(A_seq, f_seq, X0)
    wz = (w @ lin.Czmat.T).ravel()
    Gz = model.output_prediction(N)

    qp = tracking_qp(Gz, wz, zref, np.zeros(N * nu),
                     np.asarray(u_prev, dtype=float) - lin.u_s, cfg.Q, cfg.S)
    lb, ub = cfg.box(nu, lin.u_s)
    U, diagnostics = qp_solve(qp.H, qp.g, lb, ub, u0=warm_start)

    inputs = U.reshape(N, nu) + lin.u_s
    predicted = (wz + Gz @ U).reshape(N, nz) + lin.z_s
    solution = OcpSolution(
        inputs=inputs,
        predicted_cv=predicted,
        objective=qp.objective(U),
        iterations=diagnostics.iterations,
        kkt_residual=diagnostics.kkt_residual,
    )
    u0 = np.clip(inputs[0], cfg.bounds[0], cfg.bounds[1])
    return u0, solution


class LinearMpc:
    """LMPC controller object; accepts absolute beliefs from either estimator."""

    name = "lmpc"
    uses_preview = True

    def __init__(self, cfg: MpcConfig, model: DiscreteLinearModel, u_prev=None):
        self.cfg = cfg.validate()
        self.model = model
        lin = model.linear
        self.offset = np.concatenate([lin.x_s, lin.d_s])
        self.previous_input = lin.u_s.copy() if u_prev is None else np.asarray(u_prev, dtype=float)
        self.last_solution: Optional[OcpSolution] = None

    def step(self, y, preview, belief: GaussianBelief) -> np.ndarray:
        deviation = GaussianBelief(mean=belief.mean - self.offset, cov=belief.cov)
        warm = None
        if self.last_solution is not None:
            warm = (_shift(self.last_solution.inputs) - self.model.linear.u_s).ravel()
        u0, self.last_solution = lmpc_step(deviation, future_setpoints(preview), self.cfg, self.model,
                                           self.previous_input, warm)
        self.previous_input = u0
        return u0


# ---------------------------------------------------------------------------
# Nonlinear MPC (multiple shooting, Gauss-Newton SQP)
# ---------------------------------------------------------------------------

def _propagate(starts: np.ndarray, U: np.ndarray, d: np.ndarray, params: ModelParams,
               T_s: float, steps: int) -> np.ndarray:
    """Φ(s_k, u_k) for all intervals at once."""
    return integrate_rk4(lambda t, x: drift(x, U, d, params), starts, 0.0, T_s, steps)


def _propagate_with_sensitivities(starts: np.ndarray, U: np.ndarray, d: np.ndarray,
                                  params: ModelParams, T_s: float, steps: int
                                  ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Φ with ∂Φ/∂s and ∂Φ/∂u from the variational equations, batched over intervals.

    Packs [x | X | B] into one (N, 4, 7) array so a single RK4 call covers all.
    """
    N, nx = starts.shape
    nu = U.shape[1]
    Bmat = params.input_matrix

    def field(t, Y):
        x = Y[..., 0]
        dY = np.empty_like(Y)
        dY[..., 0] = drift(x, U, d, params)
        dY[..., 1:] = state_jacobian(x, params) @ Y[..., 1:]
        dY[..., 1 + nx:] += Bmat
        return dY

    Y0 = np.zeros((N, nx, 1 + nx + nu))
    Y0[..., 0] = starts
    Y0[:, :, 1:1 + nx] = np.eye(nx)
    Y = integrate_rk4(field, Y0, 0.0, T_s, steps)
    return Y[..., 0], Y[..., 1:1 + nx], Y[..., 1 + nx:]


def _rollout(x0: np.ndarray, U: np.ndarray, d: np.ndarray, params: ModelParams,
             T_s: float, steps: int) -> np.ndarray:
    states = np.empty((len(U), len(x0)))
    x = x0
    for k in range(len(U)):
        x = _propagate(x[None, :], U[k:k + 1], d, params, T_s, steps)[0]
        states[k] = x
    return states


@dataclass
class _ShootingProblem:
    x0: np.ndarray
    d: np.ndarray
    zref: np.ndarray
    u_prev: np.ndarray
    Cz: np.ndarray
    cfg: MpcConfig
    params: ModelParams

    def starts(self, S: np.ndarray) -> np.ndarray:
        return np.vstack([self.x0[None, :], S[:-1]])

    def input_residual(self, U: np.ndarray) -> np.ndarray:
        return np.diff(np.vstack([self.u_prev[None, :], U]), axis=0)

    def objective(self, S: np.ndarray, U: np.ndarray) -> float:
        rz = S @ self.Cz.T - self.zref
        du = self.input_residual(U)
        return float(np.einsum("ki,ij,kj->", rz, self.cfg.Q, rz)
                     + np.einsum("ki,ij,kj->", du, self.cfg.S, du))

    def defects(self, S: np.ndarray, U: np.ndarray) -> np.ndarray:
        end = _propagate(self.starts(S), U, self.d, self.params, self.cfg.T_s, self.cfg.rk4_steps)
        return end - S

    def merit(self, S: np.ndarray, U: np.ndarray, mu: float) -> float:
        return self.objective(S, U) + mu * float(np.sum(np.abs(self.defects(S, U))))


def nmpc_step(belief: GaussianBelief, zbar_horizon, cfg: MpcConfig, params: ModelParams,
              u_prev, warm_start: Optional[OcpSolution] = None
              ) -> Tuple[np.ndarray, OcpSolution]:
    """One NMPC move from an absolute belief [m̂; d̂].

    Decision variables are the shooting states s_1..s_N and inputs
    u_0..u_{N-1}. Each SQP iteration linearizes the continuity constraints
    s_{k+1} = Φ(s_k, u_k), condenses them into a QP over the input step,
    and globalizes with a backtracking line search on the ℓ1 merit
    J + μ Σ‖c_k‖₁. Non-convergence is flagged on the solution, never raised.
    """
    N = cfg.N_c
    x0 = np.asarray(belief.mean[:4], dtype=float)
    d_hat = np.asarray(belief.mean[4:], dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    nu, nz = 2, 2
    Cz = measurement_matrix(params)[:nz]
    problem = _ShootingProblem(x0=x0, d=d_hat, zref=extend_preview(zbar_horizon, N),
                               u_prev=u_prev, Cz=Cz, cfg=cfg, params=params)
    lb, ub = cfg.box(nu)

    if warm_start is None or warm_start.shooting_states is None:
        U = np.tile(np.clip(u_prev, *cfg.bounds), (N, 1))
        S = _rollout(x0, U, d_hat, params, cfg.T_s, cfg.rk4_steps)
    else:
        U = _shift(warm_start.inputs)
        S = _shift(warm_start.shooting_states)
        tail_start = S[-2:-1] if N > 1 else x0[None, :]
        S[-1] = _propagate(tail_start, U[-1:], d_hat, params, cfg.T_s, cfg.rk4_steps)[0]
    U = np.clip(U, cfg.bounds[0], cfg.bounds[1])

    mu = 0.0
    history: List[Tuple[float, float]] = []
    converged = False
    kkt = np.inf
    iterations = 0
    for iterations in range(1, cfg.max_sqp_iterations + 1):
        try:
            end, X, B = _propagate_with_sensitivities(problem.starts(S), U, d_hat, params,
                                                      cfg.T_s, cfg.rk4_steps)
        except IntegrationError as err:
            logger.warning("NMPC sensitivity integration failed: %s", err)
            break
        c = end - S

        # Δs_{k+1} = X_k Δs_k + B_k Δu_k + c_k with Δs_0 = 0
        Gamma = prediction_matrices(X, B)
        w = free_response(X, c, np.zeros(4))
        Gz = np.einsum("ij,kjm->kim", Cz, Gamma).reshape(N * nz, -1)
        wz = ((S + w) @ Cz.T).ravel()
        qp = tracking_qp(Gz, wz, problem.zref.ravel(), U.ravel(), u_prev, cfg.Q, cfg.S)
        try:
            p, qp_diagnostics = qp_solve(qp.H, qp.g, lb - U.ravel(), ub - U.ravel(),
                                         u0=np.zeros(N * nu))
        except QPError as err:
            logger.warning("NMPC QP failed at SQP iteration %d: %s", iterations, err)
            break
        kkt = qp_diagnostics.kkt_residual
        dU = p.reshape(N, nu)
        dS = np.einsum("knm,m->kn", Gamma, p) + w

        if max(np.max(np.abs(dU)), np.max(np.abs(dS))) < cfg.step_tolerance:
            U = np.clip(U + dU, cfg.bounds[0], cfg.bounds[1])
            S = S + dS
            converged = True
            break

        # continuity multipliers by the adjoint recursion, for the merit penalty
        grad_s = 2.0 * ((S + dS) @ Cz.T - problem.zref) @ cfg.Q @ Cz
        lam = np.empty_like(grad_s)
        lam[-1] = grad_s[-1]
        for k in range(N - 2, -1, -1):
            lam[k] = grad_s[k] + X[k + 1].T @ lam[k + 1]
        mu = max(mu, 2.0 * float(np.max(np.abs(lam))) + 1.0)

        rz = S @ Cz.T - problem.zref
        du = problem.input_residual(U)
        d_du = problem.input_residual(dU + u_prev[None, :])
        slope = (2.0 * np.einsum("ki,ij,kj->", rz, cfg.Q, dS @ Cz.T)
                 + 2.0 * np.einsum("ki,ij,kj->", du, cfg.S, d_du)
                 - mu * float(np.sum(np.abs(c))))
        merit0 = problem.objective(S, U) + mu * float(np.sum(np.abs(c)))

        alpha = 1.0
        accepted = False
        for _ in range(MAX_HALVINGS):
            S_try = S + alpha * dS
            U_try = np.clip(U + alpha * dU, cfg.bounds[0], cfg.bounds[1])
            merit_try = problem.merit(S_try, U_try, mu)
            if merit_try <= merit0 + ARMIJO * alpha * min(slope, 0.0):
                accepted = True
                break
            alpha *= BACKTRACK
        if not accepted:
            logger.warning("NMPC line search failed at SQP iteration %d", iterations)
            break
        history.append((merit0, merit_try))
        S, U = S_try, U_try

    if not converged:
        logger.warning("NMPC stopped after %d SQP iterations without meeting the step tolerance",
                     iterations)
    solution = OcpSolution(
        inputs=U,
        predicted_cv=S @ Cz.T,
        objective=problem.objective(S, U),
        iterations=iterations,
        kkt_residual=kkt,
        converged=converged,
        merit_history=history,
        shooting_states=S,
    )
    u0 = np.clip(U[0], cfg.bounds[0], cfg.bounds[1])
    return u0, solution


class NonlinearMpc:
    """NMPC controller object warm-started from its previous plan."""

    name = "nmpc"
    uses_preview = True

    def __init__(self, cfg: MpcConfig, params: ModelParams, u_prev):
        self.cfg = cfg.validate()
        self.params = params
        self.previous_input = np.asarray(u_prev, dtype=float)
        self.last_solution: Optional[OcpSolution] = None
        self.unconverged_steps = 0

    def step(self, y, preview, belief: GaussianBelief) -> np.ndarray:
        u0, self.last_solution = nmpc_step(belief, future_setpoints(preview), self.cfg, self.params,
                                           self.previous_input, self.last_solution)
        if not self.last_solution.converged:
            self.unconverged_steps += 1
        self.previous_input = u0
        return u0
