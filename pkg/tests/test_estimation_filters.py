import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from estimation.estimators import ExtendedKalmanEstimator, LinearKalmanEstimator
from estimation.filters import (
    GaussianBelief,
    StochasticModel,
    augment,
    ekf_measurement_update,
    ekf_time_update,
    initial_belief,
    kf_measurement_update,
    kf_time_update,
    linear_augment,
)
from models.presets import ESTIMATED, FILTER_TUNING
from plant.dynamics import measure
from plant.simulator import simulate_plant
from utils.errors import DomainError, FilterDivergenceError


def scalar_toy(sigma: float = 1.0, r: float = 1.0) -> StochasticModel:
    """dx = -x dt + sigma dw, y = x + v."""
    return StochasticModel(
        drift=lambda x, u: -x,
        jacobian=lambda x, u: np.array([[-1.0]]),
        diffusion=np.array([sigma]),
        output=lambda x: x,
        output_jacobian=lambda x: np.eye(1),
        meas_cov=np.array([[r]]),
    )


def _belief(mean, cov):
    return GaussianBelief(mean=np.atleast_1d(np.asarray(mean, dtype=float)),
                          cov=np.atleast_2d(np.asarray(cov, dtype=float)))


# ---------------------------------------------------------------------------
# Scalar toy cases
# ---------------------------------------------------------------------------

def test_stationary_variance_of_scalar_toy():
    model = scalar_toy(sigma=1.0)
    belief = _belief(1.0, 1.0)
    for _ in range(20):
        belief = ekf_time_update(belief, np.zeros(1), 1.0, model, steps=10)
    assert belief.cov[0, 0] == pytest.approx(0.5, abs=1e-6)


def test_noiseless_covariance_decays():
    model = scalar_toy(sigma=0.0)
    belief = _belief(0.0, 4.0)
    norms = []
    for _ in range(10):
        belief = ekf_time_update(belief, np.zeros(1), 0.5, model, steps=10)
        norms.append(np.linalg.norm(belief.cov))
    assert all(b <= a for a, b in zip(norms, norms[1:]))
    assert belief.cov[0, 0] == pytest.approx(4.0 * np.exp(-10.0), rel=1e-5)


def test_zero_interval_is_identity():
    belief = _belief(2.0, 3.0)
    assert ekf_time_update(belief, np.zeros(1), 0.0, scalar_toy()) is belief


def test_joseph_update_hand_case():
    belief, innovation = ekf_measurement_update(_belief(1.0, 1.0), np.array([3.0]), scalar_toy())
    assert innovation.K[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert belief.cov[0, 0] == pytest.approx(0.5, abs=1e-12)
    assert belief.mean[0] == pytest.approx(1.0 + 0.5 * 2.0, abs=1e-12)
    assert innovation.Re[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_exact_prediction_leaves_mean_unchanged(operating):
    x_s, _ = operating
    model = augment(ESTIMATED)
    prior = initial_belief(x_s)
    posterior, innovation = ekf_measurement_update(prior, measure(x_s, ESTIMATED), model)
    assert_allclose(innovation.e, 0.0, atol=1e-12)
    assert_allclose(posterior.mean, prior.mean, atol=1e-9)


def test_uninformative_measurement_keeps_prior(operating):
    x_s, _ = operating
    noisy = ESTIMATED.with_values({f"r2{i}": 1e12 for i in range(1, 5)})
    prior = initial_belief(x_s)
    posterior, _ = ekf_measurement_update(prior, measure(x_s, noisy) + 1.0, augment(noisy))
    assert np.linalg.norm(posterior.cov - prior.cov) < 1e-6 * np.linalg.norm(prior.cov)


def test_singular_innovation_covariance_diverges():
    model = scalar_toy(r=0.0)
    with pytest.raises(FilterDivergenceError):
        ekf_measurement_update(_belief(0.0, 0.0), np.array([1.0]), model)


# ---------------------------------------------------------------------------
# Augmented model
# ---------------------------------------------------------------------------

def test_augmented_structure(operating):
    x_s, linear = operating
    model = augment(ESTIMATED)
    x = np.concatenate([x_s.m, [1.0, 2.0, 3.0, 4.0]])
    u = np.array([280.0, 310.0])
    assert_allclose(model.drift(x, u)[4:], 0.0)
    J = model.jacobian(np.concatenate([x_s.m, np.zeros(4)]), u)
    assert_allclose(J[:4, :4], linear.Amat)
    assert_allclose(J[:4, 4:], linear.Emat)
    assert_allclose(J[4:], 0.0)


def test_disturbance_constant_without_diffusion(operating):
    x_s, _ = operating
    quiet = ESTIMATED.with_values({f"sigma_d{i}": 0.0 for i in range(1, 5)})
    model = augment(quiet)
    belief = initial_belief(x_s, d0=[5.0, -3.0, 1.0, 0.5])
    for _ in range(5):
        belief = ekf_time_update(belief, [300.0, 300.0], 5.0, model)
    assert_allclose(belief.disturbances, [5.0, -3.0, 1.0, 0.5], atol=1e-12)


def test_structured_field_matches_generic_field(operating, rng):
    x_s, _ = operating
    model = augment(ESTIMATED)
    generic = dataclasses.replace(model, moment_field=None)
    u = np.array([270.0, 320.0])
    mean = np.concatenate([x_s.m * rng.uniform(0.8, 1.2, 4), rng.normal(0.0, 5.0, 4)])
    root = rng.normal(size=(8, 8))
    moments = np.column_stack([mean, root @ root.T])
    assert_allclose(model.moments_field(u)(0.0, moments), generic.moments_field(u)(0.0, moments),
                    rtol=1e-12, atol=1e-9)


def test_structured_field_clamps_empty_tanks():
    model = augment(ESTIMATED)
    generic = dataclasses.replace(model, moment_field=None)
    moments = np.column_stack([[0.0, 500.0, -1.0, 800.0, 0.0, 0.0, 0.0, 0.0], np.eye(8)])
    u = np.array([200.0, 200.0])
    assert_allclose(model.moments_field(u)(0.0, moments), generic.moments_field(u)(0.0, moments),
                    rtol=1e-12, atol=1e-9)


def test_disturbance_estimate_converges_to_plant_inflow(operating, u_s):
    x_s, _ = operating
    inflow = np.array([20.0, 0.0, 0.0, 0.0])
    run = simulate_plant(x_s, np.tile(u_s, (500, 1)), inflow, ESTIMATED, 5.0, noise_free=True)
    ekf = ExtendedKalmanEstimator(ESTIMATED, x_s)
    for k in range(run.samples):
        ekf.measurement_update(run.y[k])
        if k + 1 < run.samples:
            ekf.time_update(u_s, 5.0)
    _, d_hat = ekf.estimate
    assert_allclose(d_hat, inflow, atol=0.01 * inflow[0])


def test_covariance_stays_consistent_over_random_cycles(operating, rng):
    _, linear = operating
    model = linear_augment(linear, FILTER_TUNING)
    belief = initial_belief(np.zeros(4), np.zeros(4))
    for _ in range(10000):
        belief = kf_time_update(belief, rng.normal(0.0, 20.0, 2), 5.0, model, steps=2)
        belief, _ = kf_measurement_update(belief, rng.normal(0.0, 0.2, 4), model)
        assert belief.is_consistent()


# ---------------------------------------------------------------------------
# Linear filter
# ---------------------------------------------------------------------------

def test_kf_matches_ekf_at_operating_point(operating, u_s):
    x_s, linear = operating
    ekf_model = augment(FILTER_TUNING)
    kf_model = linear_augment(linear, FILTER_TUNING)
    ekf = initial_belief(x_s)
    kf = initial_belief(np.zeros(4))
    y_s = measure(x_s, FILTER_TUNING)
    for _ in range(10):
        ekf, _ = ekf_measurement_update(ekf, y_s, ekf_model)
        kf, _ = kf_measurement_update(kf, np.zeros(4), kf_model)
        ekf = ekf_time_update(ekf, u_s, 5.0, ekf_model)
        kf = kf_time_update(kf, np.zeros(2), 5.0, kf_model)
    assert_allclose(kf.cov, ekf.cov, rtol=1e-9, atol=1e-9)
    assert_allclose(kf.mean + np.concatenate([x_s.m, np.zeros(4)]), ekf.mean, atol=1e-9)


def test_zero_deviation_stays_zero(operating):
    _, linear = operating
    model = linear_augment(linear, FILTER_TUNING)
    belief = kf_time_update(initial_belief(np.zeros(4)), np.zeros(2), 5.0, model)
    assert_allclose(belief.mean, 0.0)


def test_riccati_iteration_converges(operating):
    _, linear = operating
    model = linear_augment(linear, FILTER_TUNING)
    belief = initial_belief(np.zeros(4))
    previous = belief.cov
    for iteration in range(500):
        belief = kf_time_update(belief, np.zeros(2), 5.0, model)
        belief, _ = kf_measurement_update(belief, np.zeros(4), model)
        if np.max(np.abs(belief.cov - previous)) < 1e-10:
            break
        previous = belief.cov
    else:
        pytest.fail("stationary covariance not reached in 500 iterations")


def test_linear_filter_rejects_nonlinear_model():
    belief = initial_belief(np.zeros(4))
    with pytest.raises(DomainError):
        kf_time_update(belief, np.zeros(2), 5.0, augment(ESTIMATED))


def test_initial_belief_checks_covariance_size():
    with pytest.raises(DomainError):
        initial_belief(np.zeros(4), p0_diag=[1.0, 1.0])


# ---------------------------------------------------------------------------
# Estimator objects
# ---------------------------------------------------------------------------

def test_estimators_agree_on_absolute_units(operating, u_s):
    x_s, linear = operating
    ekf = ExtendedKalmanEstimator(FILTER_TUNING, x_s)
    kf = LinearKalmanEstimator(linear, FILTER_TUNING)
    y = measure(x_s, FILTER_TUNING)
    for est in (ekf, kf):
        est.measurement_update(y)
        est.time_update(u_s, 5.0)
    x_ekf, d_ekf = ekf.estimate
    x_kf, d_kf = kf.estimate
    assert_allclose(x_kf, x_ekf, rtol=1e-9)
    assert_allclose(d_kf, d_ekf, atol=1e-9)
    assert_allclose(kf.absolute_belief.mean[:4], x_s.m, rtol=1e-9)
