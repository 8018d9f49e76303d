import numpy as np
import pytest
from numpy.testing import assert_allclose

from models.presets import ESTIMATED
from plant.dynamics import LinearModel, operating_point
from plant.transfer import (
    dc_gain_matrix,
    extract_second_order,
    is_non_minimum_phase,
    relative_gain_array,
    structure_summary,
    transfer_functions,
    transmission_zeros,
)
from utils.errors import DomainError, UntunableError


def _cascade_toy() -> LinearModel:
    A = np.diag([-0.1, -0.2, -0.01, -0.05])
    A[0, 2] = 0.01
    A[1, 3] = 0.05
    B = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    C = np.eye(4)
    return LinearModel(x_s=np.ones(4), u_s=np.zeros(2), d_s=np.zeros(4), Amat=A, Bmat=B,
                       Emat=np.eye(4), Cmat=C, Czmat=C[:2])


def test_cascade_toy_time_constants():
    tf = extract_second_order(transfer_functions(_cascade_toy())[0][1])
    assert tf.tau1 == pytest.approx(100.0, rel=1e-12)
    assert tf.tau2 == pytest.approx(10.0, rel=1e-12)
    assert tf.k == pytest.approx(10.0, rel=1e-12)


def test_cross_entries_match_dc_gain(operating):
    _, model = operating
    G = transfer_functions(model)
    G0 = dc_gain_matrix(model)
    for i, j in ((0, 1), (1, 0)):
        tf = extract_second_order(G[i][j])
        assert tf.k == pytest.approx(G0[i, j], rel=1e-10)
    for i in range(2):
        for j in range(2):
            assert G[i][j].dc_gain() == pytest.approx(G0[i, j], rel=1e-10)


def test_g12_time_constants_from_eigenvalues(operating):
    _, model = operating
    tf = extract_second_order(transfer_functions(model)[0][1])
    sub = model.Amat[np.ix_([0, 2], [0, 2])]
    expected = sorted((-1.0 / np.linalg.eigvals(sub).real), reverse=True)
    assert_allclose([tf.tau1, tf.tau2], expected, rtol=1e-8)


def test_diagonal_entries_cannot_be_tuned(operating):
    _, model = operating
    with pytest.raises(UntunableError):
        extract_second_order(transfer_functions(model)[0][0])


def test_unstable_model_has_no_transfer_matrix():
    toy = _cascade_toy()
    A = toy.Amat.copy()
    A[0, 0] = 0.1
    unstable = LinearModel(toy.x_s, toy.u_s, toy.d_s, A, toy.Bmat, toy.Emat, toy.Cmat, toy.Czmat)
    with pytest.raises(DomainError):
        transfer_functions(unstable)


def test_entry_evaluation_matches_state_space(operating):
    _, model = operating
    G = transfer_functions(model)
    s = 0.003 + 0.02j
    full = model.Czmat @ np.linalg.solve(s * np.eye(4) - model.Amat, model.Bmat)
    for i in range(2):
        for j in range(2):
            assert G[i][j].evaluate(s) == pytest.approx(full[i, j], rel=1e-9)


def test_rga_follows_valve_split(operating):
    _, model = operating
    g1, g2 = ESTIMATED.gamma
    rga = relative_gain_array(model)
    assert rga[0, 0] == pytest.approx(g1 * g2 / (g1 + g2 - 1), rel=1e-8)
    assert_allclose(rga.sum(axis=1), [1.0, 1.0], atol=1e-10)


def test_non_minimum_phase_zero():
    assert is_non_minimum_phase(ESTIMATED)
    _, model = operating_point([300, 300], np.zeros(4), ESTIMATED)
    zeros = transmission_zeros(model)
    assert len(zeros) == 2
    assert np.sum(zeros.real > 0) == 1


def test_minimum_phase_split():
    params = ESTIMATED.with_values({"gamma1": 0.7, "gamma2": 0.7})
    assert not is_non_minimum_phase(params)
    _, model = operating_point([300, 300], np.zeros(4), params)
    zeros = transmission_zeros(model)
    assert len(zeros) == 2
    assert np.all(zeros.real < 0)


def test_structure_summary_names_pairing(operating):
    _, model = operating
    lines = structure_summary(model, ESTIMATED)
    assert len(lines) == 3
    assert "non-minimum phase" in lines[0]
    assert "y1-u2" in lines[2]
