"""Primal active-set solver for box-constrained convex QPs.

    minimize   ½ uᵀ H u + gᵀ u
    subject to lb <= u <= ub

Each iteration solves the equality-constrained subproblem on the free
variables with a Cholesky factorization of H_FF, then either takes the full
step, stops at the first blocking bound, or releases the active bound with
the most negative multiplier.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from utils.errors import DomainError, QPError

logger = logging.getLogger(__name__)

KKT_TOLERANCE = 1e-8
ITERATION_FACTOR = 10

FREE, LOWER, UPPER, FIXED = 0, 1, 2, 3


@dataclass
class QPDiagnostics:
    iterations: int = 0
    kkt_residual: float = np.inf
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))
    active_lower: int = 0
    active_upper: int = 0
    converged: bool = False


def kkt_residual(H: np.ndarray, g: np.ndarray, lb: np.ndarray, ub: np.ndarray,
                 u: np.ndarray, status: Optional[np.ndarray] = None) -> float:
    """max of free-set stationarity, active-set sign violation and bound violation.

    Without an explicit working set a variable counts as active when it sits
    exactly on a bound.
    """
    grad = H @ u + g
    if status is None:
        status = np.full(len(u), FREE)
        status[u <= lb] = LOWER
        status[u >= ub] = UPPER
        status[lb == ub] = FIXED
    free = status == FREE
    lower = status == LOWER
    upper = status == UPPER
    parts = [0.0]
    if np.any(free):
        parts.append(np.max(np.abs(grad[free])))
    if np.any(lower):
        parts.append(np.max(np.maximum(-grad[lower], 0.0)))
    if np.any(upper):
        parts.append(np.max(np.maximum(grad[upper], 0.0)))
    parts.append(np.max(np.maximum(lb - u, 0.0)))
    parts.append(np.max(np.maximum(u - ub, 0.0)))
    return float(max(parts))


def _check_problem(H, g, lb, ub) -> None:
    n = len(g)
    if H.shape != (n, n) or lb.shape != (n,) or ub.shape != (n,):
        raise DomainError(f"QP shapes disagree: H {H.shape}, g {g.shape}, lb {lb.shape}, ub {ub.shape}")
    if np.any(lb > ub):
        raise DomainError("QP bounds must satisfy lb <= ub")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))):
        raise DomainError("QP data must be finite")
    if np.max(np.abs(H - H.T), initial=0.0) > 1e-9 * max(1.0, np.max(np.abs(H), initial=0.0)):
        raise DomainError("QP Hessian must be symmetric")


def qp_solve(H, g, lb, ub, u0=None, max_iterations: Optional[int] = None
             ) -> Tuple[np.ndarray, QPDiagnostics]:
    """Solve the box QP; ``u0`` warm-starts the iterate and working set.

    Raises QPError carrying the last iterate when the iteration cap (10 n by
    default) is hit or H is not positive definite on the free set.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    _check_problem(H, g, lb, ub)
    n = len(g)
    diagnostics = QPDiagnostics()
    if n == 0:
        diagnostics.kkt_residual = 0.0
        diagnostics.converged = True
        return np.zeros(0), diagnostics

    cap = ITERATION_FACTOR * n if max_iterations is None else max_iterations
    tol = KKT_TOLERANCE * max(1.0, float(np.max(np.abs(g))))

    u = np.clip(np.zeros(n) if u0 is None else np.asarray(u0, dtype=float), lb, ub)
    status = np.full(n, FREE)
    status[u <= lb] = LOWER
    status[u >= ub] = UPPER
    status[lb == ub] = FIXED
    u[status == LOWER] = lb[status == LOWER]
    u[status == UPPER] = ub[status == UPPER]

    def solve_free(free: np.ndarray) -> np.ndarray:
        """Minimizer over the free variables with the others held."""
        target = u.copy()
        if np.any(free):
            rhs = -(g[free] + H[np.ix_(free, ~free)] @ u[~free])
            try:
                factor = cho_factor(H[np.ix_(free, free)])
            except LinAlgError as err:
                raise QPError("QP Hessian is not positive definite on the free set",
                              last_iterate=u.copy(), diagnostics=diagnostics) from err
            target[free] = cho_solve(factor, rhs)
            # one step of iterative refinement
            residual = rhs - H[np.ix_(free, free)] @ target[free]
            target[free] += cho_solve(factor, residual)
        return target

    for iteration in range(1, cap + 1):
        diagnostics.iterations = iteration
        free = status == FREE
        p = solve_free(free) - u

        # ratio test along p over the free variables
        alpha = 1.0
        blocking = -1
        moving = np.flatnonzero(free & (p != 0))
        if moving.size:
            room = np.where(p[moving] < 0, lb[moving] - u[moving], ub[moving] - u[moving])
            limits = np.maximum(room / p[moving], 0.0)
            j = int(np.argmin(limits))
            if limits[j] < 1.0:
                alpha, blocking = float(limits[j]), int(moving[j])
        u = np.clip(u + alpha * p, lb, ub)
        if blocking >= 0:
            if p[blocking] < 0:
                status[blocking], u[blocking] = LOWER, lb[blocking]
            else:
                status[blocking], u[blocking] = UPPER, ub[blocking]
            continue

        # u now minimizes over the working set; check the bound multipliers
        grad = H @ u + g
        signed = np.where(status == LOWER, grad, np.where(status == UPPER, -grad, 0.0))
        releasable = (status == LOWER) | (status == UPPER)
        if not np.any(releasable) or np.min(signed[releasable]) >= -tol:
            diagnostics.multipliers = np.where(status == FREE, 0.0, grad)
            diagnostics.kkt_residual = kkt_residual(H, g, lb, ub, u, status)
            diagnostics.active_lower = int(np.sum(status == LOWER))
            diagnostics.active_upper = int(np.sum(status == UPPER))
            diagnostics.converged = diagnostics.kkt_residual < tol
            if not diagnostics.converged:
                raise QPError(
                    f"KKT residual {diagnostics.kkt_residual:.3e} above tolerance {tol:.3e}",
                    last_iterate=u.copy(), diagnostics=diagnostics)
            return u, diagnostics
        candidates = np.where(releasable, signed, np.inf)
        status[int(np.argmin(candidates))] = FREE

    diagnostics.kkt_residual = kkt_residual(H, g, lb, ub, u, status)
    logger.warning("QP iteration cap %d reached (KKT residual %.3e)", cap, diagnostics.kkt_residual)
    raise QPError(f"active-set iteration cap {cap} exceeded",
                  last_iterate=u.copy(), diagnostics=diagnostics)
