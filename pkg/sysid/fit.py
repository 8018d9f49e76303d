"""Goodness of fit between measured levels and noise-free model simulations."""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from models.dataset import Dataset
from models.model_params import ModelParams
from plant.simulator import simulate_deterministic
from sysid.likelihood import initial_masses
from utils.errors import DomainError


def goodness_of_fit(dataset: Union[Dataset, np.ndarray], simulated: np.ndarray) -> float:
    """Average normalized RMSE fit in percent: 100 is a perfect match.

    GOF = (1/n_y) Σ_i (1 - ‖y_i - ỹ_i‖ / ‖y_i - mean(y_i)‖) · 100
    """
    Y = dataset.Y if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    Y_sim = np.asarray(simulated, dtype=float)
    if Y.shape != Y_sim.shape:
        raise DomainError(f"measured {Y.shape} and simulated {Y_sim.shape} shapes differ")
    Y = Y.reshape(len(Y), -1)
    Y_sim = Y_sim.reshape(len(Y_sim), -1)
    spread = np.linalg.norm(Y - Y.mean(axis=0), axis=0)
    if np.any(spread == 0):
        flat = [i + 1 for i in np.flatnonzero(spread == 0)]
        raise DomainError(f"measured channel(s) {flat} are constant; GOF is undefined")
    misfit = np.linalg.norm(Y - Y_sim, axis=0)
    return float(np.mean(1.0 - misfit / spread) * 100.0)


def simulate_for_fit(theta: ModelParams, dataset: Dataset, rk4_steps: int = 10) -> np.ndarray:
    """Noise-free levels ỹ under θ, started from the first measured levels."""
    trajectory = simulate_deterministic(initial_masses(dataset, theta), dataset.U[:-1], None,
                                        theta, dataset.T_s, rk4_steps)
    return trajectory.y


def model_fit(theta: ModelParams, dataset: Dataset, rk4_steps: int = 10) -> float:
    return goodness_of_fit(dataset, simulate_for_fit(theta, dataset, rk4_steps))


def fit_table(rows: Sequence[Tuple[str, ModelParams]], estimation: Dataset,
              validation: Optional[Dataset] = None, rk4_steps: int = 10) -> List[List[str]]:
    """GOF [%] of each θ on the estimation data and, if given, the validation data."""
    header = ["Parameters", "Estimation GOF"]
    if validation is not None:
        header.append("Validation GOF")
    table = [header]
    for label, theta in rows:
        row = [label, f"{model_fit(theta, estimation, rk4_steps):.2f}"]
        if validation is not None:
            row.append(f"{model_fit(theta, validation, rk4_steps):.2f}")
        table.append(row)
    return table
