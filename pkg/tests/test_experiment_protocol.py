import pytest
from numpy.testing import assert_allclose

from experiment.protocol import (
    COMPARISON_DURATION,
    SetpointSchedule,
    comparison_protocol,
    schedule_for,
)
from models.presets import ESTIMATED
from plant.dynamics import cv_output, steady_state
from utils.errors import DomainError


def test_comparison_scenario():
    protocol = comparison_protocol()
    assert protocol.schedule.is_staggered()
    assert protocol.bounds == (160.0, 350.0)
    assert protocol.mpc.N_c * protocol.mpc.T_s == pytest.approx(800.0)
    assert protocol.duration == COMPARISON_DURATION
    assert protocol.T_c == 50.0


def test_staggered_schedule_is_centred_on_operating_levels(u_s, d_s):
    schedule = schedule_for("staggered", ESTIMATED, u_s, d_s)
    z_s = cv_output(steady_state(u_s, d_s, ESTIMATED), ESTIMATED)
    assert_allclose(schedule.value_at(0.0), z_s)
    assert_allclose(schedule.value_at(600.0), z_s + [4.0, 0.0])
    assert_allclose(z_s, [37.3, 35.1], atol=0.1)


def test_explicit_breakpoints():
    schedule = schedule_for([[0, 30.0, 31.0], [100, 32.0, 31.0]], ESTIMATED, None, None)
    assert schedule.to_rows() == [[0.0, 30.0, 31.0], [100.0, 32.0, 31.0]]


def test_value_at_holds_ends():
    schedule = SetpointSchedule.from_rows([[10, 1.0, 2.0], [20, 3.0, 4.0]])
    assert_allclose(schedule.value_at(0.0), [1.0, 2.0])
    assert_allclose(schedule.value_at(20.0), [3.0, 4.0])
    assert_allclose(schedule.value_at(1e6), [3.0, 4.0])


def test_preview_rows():
    schedule = SetpointSchedule.from_rows([[0, 1.0, 1.0], [10, 2.0, 1.0]])
    preview = schedule.preview(0.0, 4, 5.0)
    assert_allclose(preview, [[1, 1], [1, 1], [2, 1], [2, 1]])


def test_simultaneous_change_is_not_staggered():
    schedule = SetpointSchedule.from_rows([[0, 1.0, 1.0], [10, 2.0, 2.0]])
    assert not schedule.is_staggered()


@pytest.mark.parametrize("times, values", [
    ((), ()),
    ((0.0, 0.0), ((1.0, 1.0), (2.0, 2.0))),
    ((0.0,), ((1.0, 1.0), (2.0, 2.0))),
])
def test_malformed_schedules(times, values):
    with pytest.raises(DomainError):
        SetpointSchedule(times=times, values=values)
