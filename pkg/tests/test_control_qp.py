import numpy as np
import pytest
from numpy.testing import assert_allclose

from control.discretize import zoh_matrices
from control.qp import kkt_residual, qp_solve
from tests.oracles import projected_gradient
from utils.errors import DomainError, QPError


def random_problem(rng, n):
    Qm, _ = np.linalg.qr(rng.normal(size=(n, n)))
    H = Qm @ np.diag(rng.uniform(1.0, 10.0, n)) @ Qm.T
    H = 0.5 * (H + H.T)
    g = rng.normal(0.0, 10.0, n)
    lb = rng.uniform(-2.0, 0.0, n)
    ub = lb + rng.uniform(0.1, 3.0, n)
    return H, g, lb, ub


# ---------------------------------------------------------------------------
# Box QP
# ---------------------------------------------------------------------------

def test_interior_solution():
    H = np.array([[2.0, 0.5], [0.5, 1.0]])
    g = np.array([-1.0, -1.0])
    u, diag = qp_solve(H, g, [-10.0, -10.0], [10.0, 10.0])
    assert_allclose(u, np.linalg.solve(H, -g), atol=1e-12)
    assert diag.converged
    assert diag.active_lower == diag.active_upper == 0


def test_clipped_solution():
    u, diag = qp_solve(np.eye(2), [-1.0, -2.0], [0.0, 0.0], [1.5, 1.5])
    assert_allclose(u, [1.0, 1.5], atol=1e-12)
    assert diag.active_upper == 1
    assert diag.multipliers[1] == pytest.approx(-0.5)


def test_fixed_variable():
    u, _ = qp_solve(np.eye(2), [-1.0, -1.0], [0.3, -5.0], [0.3, 5.0])
    assert_allclose(u, [0.3, 1.0], atol=1e-12)


def test_empty_problem():
    u, diag = qp_solve(np.zeros((0, 0)), np.zeros(0), np.zeros(0), np.zeros(0))
    assert u.size == 0 and diag.converged


def test_random_problems_match_projected_gradient():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(2, 13))
        H, g, lb, ub = random_problem(rng, n)
        u, diag = qp_solve(H, g, lb, ub)
        assert_allclose(u, projected_gradient(H, g, lb, ub), atol=1e-6)
        assert diag.kkt_residual <= 1e-8 * max(1.0, np.max(np.abs(g)))
        assert np.all(u >= lb) and np.all(u <= ub)


def test_warm_start_reaches_same_point():
    rng = np.random.default_rng(7)
    H, g, lb, ub = random_problem(rng, 8)
    cold, _ = qp_solve(H, g, lb, ub)
    warm, _ = qp_solve(H, g, lb, ub, u0=ub)
    assert_allclose(warm, cold, atol=1e-9)


def test_kkt_residual_of_optimum_is_small():
    H, g = np.eye(2), np.array([-1.0, 3.0])
    lb, ub = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
    assert kkt_residual(H, g, lb, ub, np.array([1.0, -1.0])) == 0.0
    assert kkt_residual(H, g, lb, ub, np.array([0.0, 0.0])) == pytest.approx(3.0)


def test_indefinite_hessian_raises():
    with pytest.raises(QPError) as info:
        qp_solve(np.diag([1.0, -1.0]), [0.0, 0.0], [-1.0, -1.0], [1.0, 1.0])
    assert info.value.last_iterate is not None


def test_iteration_cap_raises():
    with pytest.raises(QPError, match="cap"):
        qp_solve(np.eye(2), [-5.0, -5.0], [0.0, 0.0], [1.0, 1.0], max_iterations=1)


@pytest.mark.parametrize("H, g, lb, ub", [
    (np.eye(2), [0.0], [0.0, 0.0], [1.0, 1.0]),
    (np.eye(2), [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]),
    (np.array([[1.0, 1.0], [0.0, 1.0]]), [0.0, 0.0], [0.0, 0.0], [1.0, 1.0]),
    (np.eye(2), [np.nan, 0.0], [0.0, 0.0], [1.0, 1.0]),
])
def test_malformed_problems(H, g, lb, ub):
    with pytest.raises(DomainError):
        qp_solve(H, g, lb, ub)


# ---------------------------------------------------------------------------
# Zero-order hold
# ---------------------------------------------------------------------------

def test_zoh_scalar():
    Ad, Bd = zoh_matrices(np.array([[-0.5]]), np.array([[2.0]]), 3.0)
    assert Ad[0, 0] == pytest.approx(np.exp(-1.5), rel=1e-12)
    assert Bd[0, 0] == pytest.approx(2.0 * (1.0 - np.exp(-1.5)) / 0.5, rel=1e-12)


def test_zoh_integrator():
    Ad, Bd = zoh_matrices(np.zeros((2, 2)), np.eye(2), 5.0)
    assert_allclose(Ad, np.eye(2))
    assert_allclose(Bd, 5.0 * np.eye(2))


def test_zoh_rejects_nonpositive_interval():
    with pytest.raises(DomainError):
        zoh_matrices(np.eye(1), np.eye(1), 0.0)
