"""Maximum-likelihood parameter estimation by Nelder-Mead over transformed θ."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import OptimizeResult, minimize

from models.dataset import Dataset
from models.model_params import SCALAR_FIELDS, ModelParams, split_name
from sysid.likelihood import negative_log_likelihood
from utils.errors import DomainError, EstimationError
from utils.seeding import component_rng

logger = logging.getLogger(__name__)

# Stand-in objective for evaluations that diverge; keeps the simplex ordering finite.
DIVERGED_VALUE = 1e300

DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "a": (1e-2, 10.0),
    "A": (10.0, 5000.0),
    "gamma": (1e-3, 1.0 - 1e-3),
    "sigma": (1e-6, 1e3),
    "sigma_d": (1e-6, 1e3),
}

ESTIMABLE = tuple(DEFAULT_BOUNDS)

# Excitation experiments carry no unmodelled inflow, so the disturbance
# random walk is switched off while identifying the other parameters.
IDENTIFICATION_SIGMA_D = (0.0, 0.0, 0.0, 0.0)


def to_transformed(name: str, value: float) -> float:
    """log for positive parameters, logit for valve fractions."""
    base, _ = split_name(name)
    if base == "gamma":
        return math.log(value / (1.0 - value))
    return math.log(value)


def from_transformed(name: str, z: float) -> float:
    base, _ = split_name(name)
    if base == "gamma":
        return 1.0 / (1.0 + math.exp(-z))
    return math.exp(z)


def hold_disturbances(theta: ModelParams, free: Sequence[str] = (),
                      sigma_d: Sequence[float] = IDENTIFICATION_SIGMA_D) -> ModelParams:
    """θ with every σ_d entry that is not being estimated set to ``sigma_d``.

    A filter whose disturbance states random-walk can explain level
    mismatches without moving a or γ, which flattens V_ML and biases the
    fit when the data came from a plant without disturbances.
    """
    names = ModelParams.names_for("sigma_d")
    if len(sigma_d) != len(names):
        raise DomainError(f"need {len(names)} disturbance intensities, got {len(sigma_d)}")
    held = {name: float(value) for name, value in zip(names, sigma_d) if name not in free}
    return theta.with_values(held) if held else theta


@dataclass
class EstimationProblem:
    """Dataset, free-parameter names, initial guess and bounds.

    Parameters not listed in ``free`` stay at their ``theta0`` value. The
    measurement variances r2, rho and g_a cannot be freed. With
    ``workers`` > 1 the starts run in separate processes.
    """
    dataset: Dataset
    free: Tuple[str, ...]
    theta0: ModelParams
    bounds: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    starts: int = 3
    start_spread: float = 0.1
    initial_step: float = 0.1
    xatol: float = 1e-6
    fatol: float = 1e-9
    max_evaluations: int = 2000
    rk4_steps: int = 10
    seed: int = 0
    workers: int = 1

    def bounds_for(self, name: str) -> Tuple[float, float]:
        if name in self.bounds:
            return self.bounds[name]
        base, _ = split_name(name)
        return DEFAULT_BOUNDS[base]

    def validate(self) -> "EstimationProblem":
        self.dataset.validate()
        self.theta0.validate()
        if len(set(self.free)) != len(self.free):
            raise DomainError(f"duplicate free parameters in {self.free}")
        for name in self.free:
            base, _ = split_name(name)
            if base in SCALAR_FIELDS:
                raise DomainError(f"{name} is a physical constant and is never estimated")
            if base not in ESTIMABLE:
                raise DomainError(f"{name} is held fixed during estimation")
            lo, hi = self.bounds_for(name)
            value = self.theta0.get(name)
            if not lo <= value <= hi:
                raise DomainError(f"initial {name}={value} is outside its bounds [{lo}, {hi}]")
        if self.starts < 1:
            raise DomainError("at least one start is needed")
        if self.workers < 1:
            raise DomainError(f"workers must be positive, got {self.workers}")
        return self


@dataclass
class EstimationDiagnostics:
    evaluations: int = 0
    finite_evaluations: int = 0
    best_trace: List[float] = field(default_factory=list)
    start_values: List[float] = field(default_factory=list)
    converged: bool = False
    message: str = ""


@dataclass
class EstimationResult:
    theta: ModelParams
    v_ml: float
    diagnostics: EstimationDiagnostics


class _Objective:
    """V_ML in transformed coordinates with evaluation bookkeeping."""

    def __init__(self, problem: EstimationProblem):
        self.problem = problem
        self.evaluations = 0
        self.finite_evaluations = 0
        self.trace: List[float] = []
        self.best = math.inf
        self.best_z: Optional[np.ndarray] = None

    def theta(self, z: np.ndarray) -> ModelParams:
        values = {name: from_transformed(name, zi) for name, zi in zip(self.problem.free, z)}
        return self.problem.theta0.with_values(values)

    def __call__(self, z: np.ndarray) -> float:
        self.evaluations += 1
        value = negative_log_likelihood(self.theta(z), self.problem.dataset,
                                        rk4_steps=self.problem.rk4_steps)
        if not math.isfinite(value):
            return DIVERGED_VALUE
        self.finite_evaluations += 1
        if value < self.best:
            self.best = value
            self.best_z = np.array(z, dtype=float)
            self.trace.append(value)
            logger.debug("V_ML improved to %.6f after %d evaluations", value, self.evaluations)
        return value


def _initial_simplex(z0: np.ndarray, step: float) -> np.ndarray:
    simplex = np.tile(z0, (len(z0) + 1, 1))
    for i in range(len(z0)):
        simplex[i + 1, i] += step
    return simplex


def _run_start(problem: EstimationProblem, z_start: np.ndarray
               ) -> Tuple[_Objective, OptimizeResult]:
    """One Nelder-Mead run from ``z_start``; module level so worker processes can run it."""
    z_bounds = [tuple(to_transformed(n, b) for b in problem.bounds_for(n)) for n in problem.free]
    lower = np.array([b[0] for b in z_bounds])
    upper = np.array([b[1] for b in z_bounds])
    objective = _Objective(problem)
    simplex = np.clip(_initial_simplex(z_start, problem.initial_step), lower, upper)
    result = minimize(
        objective, z_start, method="Nelder-Mead", bounds=z_bounds,
        options={
            "xatol": problem.xatol,
            "fatol": problem.fatol,
            "maxfev": problem.max_evaluations,
            "initial_simplex": simplex,
        },
    )
    return objective, result


def start_points(problem: EstimationProblem) -> List[np.ndarray]:
    """θ0 in transformed coordinates, then ``starts - 1`` clipped perturbations of it."""
    z0 = np.array([to_transformed(n, problem.theta0.get(n)) for n in problem.free])
    z_bounds = [tuple(to_transformed(n, b) for b in problem.bounds_for(n)) for n in problem.free]
    lower = np.array([b[0] for b in z_bounds])
    upper = np.array([b[1] for b in z_bounds])
    rng = component_rng(problem.seed, "estimation_starts")
    points = [z0]
    for _ in range(problem.starts - 1):
        points.append(np.clip(z0 + problem.start_spread * rng.standard_normal(len(z0)),
                              lower, upper))
    return points


def estimate_parameters(problem: EstimationProblem) -> EstimationResult:
    """Minimize V_ML over the free parameters; best of ``problem.starts`` runs.

    The first start is θ0 itself; the others perturb it in transformed
    coordinates with the ``estimation_starts`` random stream. Start points
    are drawn before any run, so the result does not depend on ``workers``.
    """
    problem.validate()
    diagnostics = EstimationDiagnostics()
    if not problem.free:
        value = negative_log_likelihood(problem.theta0, problem.dataset,
                                        rk4_steps=problem.rk4_steps)
        diagnostics.evaluations = 1
        diagnostics.finite_evaluations = int(math.isfinite(value))
        diagnostics.converged = True
        diagnostics.message = "no free parameters"
        return EstimationResult(theta=problem.theta0, v_ml=value, diagnostics=diagnostics)

    points = start_points(problem)
    if problem.workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(problem.workers, len(points))) as executor:
            runs = list(executor.map(_run_start, [problem] * len(points), points))
    else:
        runs = [_run_start(problem, z) for z in points]

    best: Optional[_Objective] = None
    converged = []
    for start, (objective, result) in enumerate(runs):
        diagnostics.evaluations += objective.evaluations
        diagnostics.finite_evaluations += objective.finite_evaluations
        diagnostics.start_values.append(float(result.fun))
        converged.append(bool(result.success))
        logger.info("estimation start %d/%d: V_ML=%.6f after %d evaluations (%s)",
                    start + 1, problem.starts, result.fun, result.nfev, result.message)
        if objective.best_z is None:
            continue
        running = diagnostics.best_trace[-1] if diagnostics.best_trace else math.inf
        diagnostics.best_trace.extend(v for v in objective.trace if v < running)
        if best is None or objective.best < best.best:
            best = objective

    if best is None:
        raise EstimationError(
            f"all {diagnostics.evaluations} likelihood evaluations diverged; "
            "check the dataset and the initial guess"
        )
    diagnostics.converged = any(converged)
    diagnostics.message = "converged" if diagnostics.converged else "evaluation limit reached"
    return EstimationResult(theta=best.theta(best.best_z), v_ml=best.best, diagnostics=diagnostics)


def default_free_parameters(bases: Sequence[str] = ("a", "gamma")) -> Tuple[str, ...]:
    """Expand base names into indexed free parameters: ("a",) -> ("a1", ..., "a4")."""
    names: List[str] = []
    for base in bases:
        names.extend(ModelParams.names_for(base))
    return tuple(names)
