"""Exact zero-order-hold discretization."""

from typing import Tuple

import numpy as np
from scipy.linalg import expm

from plant.dynamics import LinearModel
from utils.errors import DomainError


def zoh_matrices(A: np.ndarray, B: np.ndarray, T_s: float) -> Tuple[np.ndarray, np.ndarray]:
    """Ad = e^(A T_s), Bd = ∫0^T_s e^(A s) ds B from one augmented exponential."""
    if T_s <= 0:
        raise DomainError(f"sampling time must be positive, got {T_s}")
    n, m = B.shape
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    Phi = expm(M * T_s)
    return Phi[:n, :n], Phi[:n, n:]


def zoh_discretize(model: LinearModel, T_s: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Ad, Bd, Ed) of the linearization; disturbances are held like inputs."""
    Ad, BEd = zoh_matrices(model.Amat, np.hstack([model.Bmat, model.Emat]), T_s)
    nu = model.Bmat.shape[1]
    return Ad, BEd[:, :nu], BEd[:, nu:]
