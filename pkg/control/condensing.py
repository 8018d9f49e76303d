"""Condensing of linear(ized) prediction models into dense tracking QPs."""

from dataclasses import dataclass

import numpy as np

from utils.errors import DomainError


def prediction_matrices(A_seq: np.ndarray, B_seq: np.ndarray) -> np.ndarray:
    """Γ with x_{k+1} = Γ[k] @ [u_0; ...; u_{N-1}] for x_{k+1} = A_k x_k + B_k u_k, x_0 = 0.

    A_seq has shape (N, nx, nx), B_seq (N, nx, nu); the result (N, nx, N nu).
    """
    N, nx, nu = B_seq.shape
    Gamma = np.zeros((N, nx, N * nu))
    Gamma[0, :, :nu] = B_seq[0]
    for k in range(1, N):
        Gamma[k, :, :k * nu] = A_seq[k] @ Gamma[k - 1, :, :k * nu]
        Gamma[k, :, k * nu:(k + 1) * nu] = B_seq[k]
    return Gamma


def free_response(A_seq: np.ndarray, f_seq: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """x_1..x_N of x_{k+1} = A_k x_k + f_k with zero input."""
    N, nx, _ = A_seq.shape
    w = np.empty((N, nx))
    x = np.asarray(x0, dtype=float)
    for k in range(N):
        x = A_seq[k] @ x + f_seq[k]
        w[k] = x
    return w


def difference_matrix(N: int, nu: int) -> np.ndarray:
    """D with (D u)_k = u_k - u_{k-1}; the u_{-1} term enters through the offset."""
    D = np.eye(N * nu)
    D[nu:, :-nu] -= np.eye((N - 1) * nu)
    return D


@dataclass(frozen=True)
class TrackingQP:
    """½ pᵀ H p + gᵀ p + constant; the constant is the objective at p = 0."""
    H: np.ndarray
    g: np.ndarray
    constant: float

    def objective(self, p: np.ndarray) -> float:
        return float(0.5 * p @ self.H @ p + self.g @ p + self.constant)


def tracking_qp(Gz: np.ndarray, wz: np.ndarray, zref: np.ndarray, u_lin: np.ndarray,
                u_prev: np.ndarray, Q: np.ndarray, S: np.ndarray) -> TrackingQP:
    """QP in the input step p for Σ‖z_k - z̄_k‖²_Q + Σ‖Δu_k‖²_S.

    The outputs are z = wz + Gz p (stacked over k = 1..N) and the inputs
    u_lin + p, with Δu_0 taken against ``u_prev``.
    """
    nz = Q.shape[0]
    nu = S.shape[0]
    N = len(u_lin) // nu
    if Gz.shape != (N * nz, N * nu) or wz.shape != (N * nz,) or zref.shape != (N * nz,):
        raise DomainError(f"condensed QP shapes disagree: Gz {Gz.shape}, wz {wz.shape}")

    D = difference_matrix(N, nu)
    b = np.zeros(N * nu)
    b[:nu] = u_prev
    # Q and S act blockwise on each horizon step
    QG = np.einsum("ij,kjm->kim", Q, Gz.reshape(N, nz, -1)).reshape(N * nz, -1)
    SD = np.einsum("ij,kjm->kim", S, D.reshape(N, nu, -1)).reshape(N * nu, -1)

    r_z = wz - zref
    r_u = D @ u_lin - b
    Qr = (r_z.reshape(N, nz) @ Q.T).ravel()
    Sr = (r_u.reshape(N, nu) @ S.T).ravel()

    H = 2.0 * (Gz.T @ QG + D.T @ SD)
    H = 0.5 * (H + H.T)
    g = 2.0 * (Gz.T @ Qr + D.T @ Sr)
    constant = float(r_z @ Qr + r_u @ Sr)
    return TrackingQP(H=H, g=g, constant=constant)


def extend_preview(zbar_horizon, N: int) -> np.ndarray:
    """First N setpoint rows, repeating the last row when the preview is shorter."""
    zbar = np.atleast_2d(np.asarray(zbar_horizon, dtype=float))
    if len(zbar) == 0:
        raise DomainError("the setpoint preview is empty")
    if len(zbar) >= N:
        return zbar[:N]
    tail = np.repeat(zbar[-1:], N - len(zbar), axis=0)
    return np.vstack([zbar, tail])
