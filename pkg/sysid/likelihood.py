"""Negative log-likelihood of CD-EKF innovations (prediction-error form)."""

import logging
import math
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from estimation.filters import (
    DEFAULT_P0_DIAG,
    DEFAULT_RK4_STEPS,
    Innovation,
    augment,
    ekf_measurement_update,
    ekf_time_update,
    initial_belief,
)
from models.dataset import Dataset
from models.model_params import ModelParams
from utils.errors import DomainError, FilterDivergenceError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


def innovation_nll(terms: Iterable[Tuple[np.ndarray, np.ndarray]]) -> float:
    """½ Σ (ln det Re + e' Re⁻¹ e) + (N n_y / 2) ln 2π over (e, Re) pairs."""
    total = 0.0
    count = 0
    for e, Re in terms:
        e = np.atleast_1d(np.asarray(e, dtype=float))
        Re = np.atleast_2d(np.asarray(Re, dtype=float))
        sign, logdet = np.linalg.slogdet(Re)
        if sign <= 0:
            return math.inf
        total += logdet + float(e @ np.linalg.solve(Re, e))
        count += len(e)
    return 0.5 * total + 0.5 * count * LOG_2PI


def initial_masses(dataset: Dataset, params: ModelParams) -> np.ndarray:
    """Start the filter from the first measured levels."""
    return np.maximum(dataset.Y[0], 0.0) * params.rho * params.A_vec


def iter_innovations(theta: ModelParams, dataset: Dataset,
                     rk4_steps: int = DEFAULT_RK4_STEPS,
                     p0_diag: Sequence[float] = DEFAULT_P0_DIAG) -> Iterator[Innovation]:
    """Run the augmented CD-EKF through ``dataset``, yielding one innovation per sample."""
    model = augment(theta)
    belief = initial_belief(initial_masses(dataset, theta), p0_diag=p0_diag)
    T_s = dataset.T_s
    for k in range(dataset.size):
        belief, innovation = ekf_measurement_update(belief, dataset.Y[k], model)
        yield innovation
        if k + 1 < dataset.size:
            belief = ekf_time_update(belief, dataset.U[k], T_s, model, rk4_steps)


def filter_innovations(theta: ModelParams, dataset: Dataset,
                       rk4_steps: int = DEFAULT_RK4_STEPS,
                       p0_diag: Sequence[float] = DEFAULT_P0_DIAG) -> List[Innovation]:
    return list(iter_innovations(theta, dataset, rk4_steps, p0_diag))


def negative_log_likelihood(theta: ModelParams, dataset: Dataset,
                            rk4_steps: int = DEFAULT_RK4_STEPS,
                            p0_diag: Sequence[float] = DEFAULT_P0_DIAG) -> float:
    """V_ML(θ); +inf when the filter diverges or θ leaves the model domain."""
    total = 0.0
    try:
        for innovation in iter_innovations(theta, dataset, rk4_steps, p0_diag):
            total += innovation.log_det + innovation.weighted
    except (FilterDivergenceError, DomainError) as err:
        logger.debug("V_ML is infinite at %s: %s", theta, err)
        return math.inf
    value = 0.5 * total + 0.5 * dataset.size * dataset.Y.shape[1] * LOG_2PI
    if not math.isfinite(value):
        logger.debug("V_ML is non-finite at %s", theta)
        return math.inf
    return value
