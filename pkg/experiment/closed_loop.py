"""Closed-loop simulation of plant, estimator and controller."""

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple

import numpy as np

from control.mpc import DiscreteLinearModel, LinearMpc, MpcConfig, NonlinearMpc
from control.pid import PidController, imc_tune
from estimation.estimators import ExtendedKalmanEstimator, LinearKalmanEstimator
from estimation.filters import DEFAULT_P0_DIAG, DEFAULT_RK4_STEPS
from experiment.protocol import SetpointSchedule, schedule_for
from models.model_params import ModelParams
from models.presets import resolve_params
from models.run_config import RunConfig
from models.run_record import RunMetadata, RunRecord, RunRecorder
from plant.dynamics import StateLike, as_masses, linearize, steady_state
from plant.simulator import measure_noisy, plant_step
from plant.transfer import extract_second_order, transfer_functions
from utils.errors import ClosedLoopError, DomainError, FilterDivergenceError, IntegrationError, QPError
from utils.seeding import component_rng

logger = logging.getLogger(__name__)

CONTROLLER_ORDER = ("pid", "lmpc", "nmpc")


@dataclass
class PlantConfig:
    """Simulated plant truth and its unmodelled inflow d*(t)."""
    params: ModelParams
    x0: StateLike
    T_s: float = 5.0
    substeps: int = 10
    noise_free: bool = False
    disturbance: np.ndarray = field(default_factory=lambda: np.zeros(4))
    disturbance_start: float = 0.0

    def disturbance_at(self, t: float) -> np.ndarray:
        if t + 1e-9 < self.disturbance_start:
            return np.zeros(4)
        return np.asarray(self.disturbance, dtype=float)


def sample_grid(duration: float, T_s: float) -> np.ndarray:
    intervals = duration / T_s
    if intervals < 0 or abs(intervals - round(intervals)) > 1e-9:
        raise DomainError(f"duration {duration} s is not a multiple of T_s={T_s} s")
    return T_s * np.arange(int(round(intervals)) + 1)


def run_closed_loop(plant: PlantConfig, estimator, controller, schedule: SetpointSchedule,
                    duration: float, seed: int,
                    metadata: Optional[RunMetadata] = None) -> RunRecord:
    """Simulate the loop for ``duration`` seconds; one record row per sample.

    Each sample: noisy measurement, estimator measurement update, controller
    move with the setpoint preview, plant step over [t, t+T_s), estimator
    time update. A component failure raises ClosedLoopError carrying the
    rows logged so far.
    """
    T_s = plant.T_s
    metadata = metadata or RunMetadata()
    metadata.controller = metadata.controller or getattr(controller, "name", "")
    metadata.seed = seed
    metadata.T_s = T_s
    metadata.duration = duration
    recorder = RunRecorder(metadata)

    plant_rng = component_rng(seed, "plant")
    sensor_rng = component_rng(seed, "sensor")
    horizon = controller.cfg.N_c if getattr(controller, "uses_preview", False) else 0
    times = sample_grid(duration, T_s)
    m = as_masses(plant.x0).copy()

    for k, t in enumerate(times):
        try:
            y = measure_noisy(m, plant.params, sensor_rng, plant.noise_free)
            estimator.measurement_update(y)
            preview = schedule.preview(t, horizon + 1, T_s)
            u = controller.step(y, preview, estimator.absolute_belief)
            x_hat, d_hat = estimator.estimate
            recorder.append(t, preview[0], y, u, x_hat, d_hat)
            if k + 1 < len(times):
                m = plant_step(m, u, plant.disturbance_at(t), plant.params, T_s,
                               plant.substeps, plant_rng, plant.noise_free)
                estimator.time_update(u, T_s)
        except (DomainError, FilterDivergenceError, QPError, IntegrationError,
                np.linalg.LinAlgError) as err:
            metadata.completed = False
            metadata.note = f"aborted at t={t:g} s: {err}"
            logger.error("%s run aborted at t=%g s: %s", metadata.controller, t, err)
            raise ClosedLoopError(metadata.note, record=recorder.build()) from err
        if k % 100 == 0:
            logger.debug("%s t=%g s y=%s u=%s", metadata.controller, t, y[:2], u)

    return recorder.build()


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def filter_params(model: ModelParams, tuning: ModelParams) -> ModelParams:
    """Model a/A/γ with the noise description of the filter tuning."""
    return model.with_noise_from(tuning)


def build_pid(model: ModelParams, u_s, d_s, T_c: float, T_s: float,
              bounds: Tuple[float, float], derivative_filter: float = 10.0) -> PidController:
    """IMC-tuned loops on g12 (u2 -> y1) and g21 (u1 -> y2)."""
    x_s = steady_state(u_s, d_s, model)
    G = transfer_functions(linearize(x_s, u_s, d_s, model))
    tf_u2 = extract_second_order(G[0][1])
    tf_u1 = extract_second_order(G[1][0])
    gains_u1 = imc_tune(tf_u1, T_c, u_bias=u_s[0])
    gains_u2 = imc_tune(tf_u2, T_c, u_bias=u_s[1])
    if derivative_filter != gains_u1.N_f:
        gains_u1 = replace(gains_u1, N_f=derivative_filter)
        gains_u2 = replace(gains_u2, N_f=derivative_filter)
    logger.info("PID u1<-y2: Kp=%.4g tau_i=%.4g tau_d=%.4g; u2<-y1: Kp=%.4g tau_i=%.4g tau_d=%.4g",
                gains_u1.Kp, gains_u1.tau_i, gains_u1.tau_d,
                gains_u2.Kp, gains_u2.tau_i, gains_u2.tau_d)
    return PidController(gains_u1, gains_u2, T_s, bounds)


def build_loop(controller_name: str, model: ModelParams, tuning: ModelParams, u_s, d_s,
               mpc: MpcConfig, T_c: float, x0: Optional[StateLike] = None,
               p0_diag: Sequence[float] = DEFAULT_P0_DIAG,
               rk4_steps: int = DEFAULT_RK4_STEPS, derivative_filter: float = 10.0):
    """Estimator and controller for one of pid, lmpc, nmpc.

    The PID loop carries a CD-EKF as a passive monitor so every record logs
    x̂ and d̂. Estimators start at the model steady state unless ``x0`` is given.
    """
    u_s = np.asarray(u_s, dtype=float)
    d_s = np.asarray(d_s, dtype=float)
    noise = filter_params(model, tuning)
    x_s = steady_state(u_s, d_s, model)
    start = x_s if x0 is None else x0

    if controller_name == "pid":
        controller = build_pid(model, u_s, d_s, T_c, mpc.T_s, mpc.bounds, derivative_filter)
        estimator = ExtendedKalmanEstimator(noise, start, d_s, p0_diag, rk4_steps)
    elif controller_name == "lmpc":
        linear = linearize(x_s, u_s, d_s, model)
        estimator = LinearKalmanEstimator(linear, noise, start, d_s, p0_diag, rk4_steps)
        controller = LinearMpc(mpc, DiscreteLinearModel(linear, mpc.T_s), u_prev=u_s)
    elif controller_name == "nmpc":
        estimator = ExtendedKalmanEstimator(noise, start, d_s, p0_diag, rk4_steps)
        controller = NonlinearMpc(mpc, model, u_prev=u_s)
    else:
        raise DomainError(f"unknown controller {controller_name!r}; expected one of {CONTROLLER_ORDER}")
    return estimator, controller


# ---------------------------------------------------------------------------
# Config-driven runs
# ---------------------------------------------------------------------------

def mpc_config(config: RunConfig) -> MpcConfig:
    return MpcConfig(
        Q=np.diag(config.mpc.Q),
        S=np.diag(config.mpc.S),
        N_c=config.mpc.N_c,
        T_s=config.T_s,
        bounds=(float(config.bounds[0]), float(config.bounds[1])),
        rk4_steps=config.filter.rk4_steps,
        max_sqp_iterations=config.mpc.max_sqp_iterations,
        step_tolerance=config.mpc.step_tolerance,
    )


def run_configured(config: RunConfig) -> RunRecord:
    """Closed-loop run of ``config.controller`` as described by a validated config.

    The plant starts at its own steady state for (u_s, d_s); the estimator
    and controller use the model preset.
    """
    config.validate()
    plant_params = resolve_params(config.plant_preset)
    model = resolve_params(config.model_preset)
    tuning = resolve_params(config.filter_preset)
    u_s = np.asarray(config.u_s, dtype=float)
    d_s = np.asarray(config.d_s, dtype=float)

    schedule = schedule_for(config.schedule, model, u_s, d_s)
    estimator, controller = build_loop(
        config.controller, model, tuning, u_s, d_s, mpc_config(config), config.pid.T_c,
        p0_diag=config.filter.p0_diag, rk4_steps=config.filter.rk4_steps,
        derivative_filter=config.pid.derivative_filter,
    )
    plant = PlantConfig(
        params=plant_params,
        x0=steady_state(u_s, d_s, plant_params),
        T_s=config.T_s,
        substeps=config.plant_substeps,
        noise_free=config.noise_free,
        disturbance=np.asarray(config.disturbance, dtype=float),
        disturbance_start=config.disturbance_start,
    )
    metadata = RunMetadata(
        controller=config.controller,
        plant_preset=config.plant_preset,
        model_preset=config.model_preset,
        filter_preset=config.filter_preset,
        bounds=[float(b) for b in config.bounds],
    )
    logger.info("Running %s for %g s (seed %s)", config.controller, config.duration, config.seed)
    return run_closed_loop(plant, estimator, controller, schedule, config.duration,
                           config.seed, metadata)
