"""Transfer functions of the linearized plant, second-order extraction, zeros and RGA."""

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg

from models.model_params import ModelParams
from plant.dynamics import LinearModel
from utils.errors import DomainError, UntunableError


@dataclass(frozen=True)
class SecondOrderTF:
    """k / ((tau1 s + 1)(tau2 s + 1)) with tau1 >= tau2 > 0."""
    k: float
    tau1: float
    tau2: float

    def __post_init__(self):
        if not (self.tau1 >= self.tau2 > 0):
            raise DomainError(
                f"second-order TF needs tau1 >= tau2 > 0, got ({self.tau1}, {self.tau2})"
            )

    def dc_gain(self) -> float:
        return self.k


@dataclass(frozen=True)
class TransferEntry:
    """One SISO entry num(s) / ((s - p1)(s - p2)) of the 2x2 CV transfer matrix.

    ``num`` holds polynomial coefficients, highest power first, with leading
    zeros removed.
    """
    row: int
    col: int
    num: Tuple[float, ...]
    poles: Tuple[float, float]

    @property
    def den(self) -> np.ndarray:
        return np.poly(self.poles)

    @property
    def numerator_degree(self) -> int:
        return len(self.num) - 1

    @property
    def label(self) -> str:
        return f"g{self.row + 1}{self.col + 1}"

    def evaluate(self, s: complex) -> complex:
        return np.polyval(self.num, s) / np.polyval(self.den, s)

    def dc_gain(self) -> float:
        return float(np.real(self.evaluate(0.0)))


TransferMatrix = List[List[TransferEntry]]


def _trim(coefficients) -> Tuple[float, ...]:
    trimmed = np.trim_zeros(np.asarray(coefficients, dtype=float), "f")
    return tuple(trimmed) if trimmed.size else (0.0,)


def transfer_functions(model: LinearModel) -> TransferMatrix:
    """Cz (sI - A)^-1 B for the four-tank topology, entry by entry.

    Bottom tank i (0 or 1) is fed by top tank c = i + 2, which only sees the
    pumps. Each entry therefore has the poles of tanks i and c, and
    numerator C_ii * (B[i, j] (s - A_cc) + A_ic B[c, j]).
    """
    A, B, C = model.Amat, model.Bmat, model.Cmat
    if np.any(np.real(np.linalg.eigvals(A)) >= 0):
        raise DomainError("transfer functions need a Hurwitz A matrix")
    matrix: TransferMatrix = []
    for i in range(2):
        c = i + 2
        row = []
        for j in range(2):
            num = C[i, i] * np.array([B[i, j], -B[i, j] * A[c, c] + A[i, c] * B[c, j]])
            row.append(TransferEntry(row=i, col=j, num=_trim(num),
                                     poles=(float(A[i, i]), float(A[c, c]))))
        matrix.append(row)
    return matrix


def extract_second_order(entry: TransferEntry) -> SecondOrderTF:
    """Match ``entry`` to k / ((tau1 s + 1)(tau2 s + 1)).

    Only pure cascades qualify (constant numerator): in the four-tank
    topology those are g12 and g21. The diagonal entries carry a direct pump
    path plus the cascade and have a first-order numerator.
    """
    if entry.numerator_degree > 0:
        raise UntunableError(
            f"{entry.label} has a numerator of degree {entry.numerator_degree} "
            "(direct path plus cascade) and cannot be written as k/((tau1 s+1)(tau2 s+1))"
        )
    if any(p >= 0 for p in entry.poles):
        raise UntunableError(f"{entry.label} has non-negative poles {entry.poles}")
    tau1, tau2 = sorted((-1.0 / p for p in entry.poles), reverse=True)
    return SecondOrderTF(k=entry.dc_gain(), tau1=tau1, tau2=tau2)


def dc_gain_matrix(model: LinearModel) -> np.ndarray:
    """-Cz A^-1 B: steady level change per unit pump flow change."""
    return -model.Czmat @ np.linalg.solve(model.Amat, model.Bmat)


def transmission_zeros(model: LinearModel) -> np.ndarray:
    """Finite zeros of the square system (A, B, Cz) from the Rosenbrock pencil."""
    n, m = model.Bmat.shape
    M = np.block([[model.Amat, model.Bmat],
                  [-model.Czmat, np.zeros((m, m))]])
    N = np.zeros_like(M)
    N[:n, :n] = np.eye(n)
    values = linalg.eigvals(M, N)
    finite = values[np.isfinite(values)]
    return np.sort_complex(finite[np.abs(finite) < 1e10])


def relative_gain_array(model: LinearModel) -> np.ndarray:
    """Bristol's RGA G(0) .* inv(G(0))^T."""
    G0 = dc_gain_matrix(model)
    return G0 * np.linalg.inv(G0).T


def is_non_minimum_phase(params: ModelParams) -> bool:
    """True when the valve split puts a transmission zero in the right half-plane."""
    return sum(params.gamma) < 1.0


def structure_summary(model: LinearModel, params: ModelParams) -> List[str]:
    """Printable notes on zeros, phase character and the RGA pairing at the operating point."""
    zeros = transmission_zeros(model)
    rga = relative_gain_array(model)
    phase = "non-minimum phase" if is_non_minimum_phase(params) else "minimum phase"
    pairing = "y1-u1, y2-u2" if rga[0, 0] >= 0.5 else "y1-u2, y2-u1"
    return [
        f"gamma1 + gamma2 = {sum(params.gamma):.3f} ({phase})",
        "transmission zeros: " + ", ".join(f"{z.real:.5g}{z.imag:+.3g}j" for z in zeros),
        f"RGA lambda11 = {rga[0, 0]:.4f}; suggested pairing {pairing}",
    ]
