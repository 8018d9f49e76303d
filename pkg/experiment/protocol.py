"""Setpoint schedules and the canned controller-comparison scenario."""

from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

from control.mpc import MpcConfig
from models.model_params import ModelParams
from models.presets import ESTIMATED
from plant.dynamics import cv_output, steady_state
from utils.errors import DomainError

# Offsets [cm] from the operating CV levels; one channel moves at a time.
COMPARISON_STEPS: Tuple[Tuple[float, float, float], ...] = (
    (0.0, 0.0, 0.0),
    (300.0, 4.0, 0.0),
    (900.0, 4.0, 3.0),
    (1500.0, -2.0, 3.0),
    (2100.0, -2.0, -3.0),
    (2700.0, 1.0, -3.0),
)
COMPARISON_DURATION = 3300.0


@dataclass(frozen=True)
class SetpointSchedule:
    """Piecewise-constant z̄(t) from breakpoints (t_i, z̄_i); held before t_0 and after t_last."""
    times: Tuple[float, ...]
    values: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise DomainError("a schedule needs one value per breakpoint and at least one breakpoint")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DomainError(f"schedule times must be strictly increasing: {self.times}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "SetpointSchedule":
        return cls(times=tuple(float(r[0]) for r in rows),
                   values=tuple((float(r[1]), float(r[2])) for r in rows))

    def to_rows(self) -> List[List[float]]:
        return [[t, z[0], z[1]] for t, z in zip(self.times, self.values)]

    def value_at(self, t: float) -> np.ndarray:
        index = int(np.searchsorted(self.times, t + 1e-9, side="right")) - 1
        return np.array(self.values[max(index, 0)])

    def preview(self, t: float, rows: int, T_s: float) -> np.ndarray:
        """z̄ at t, t+T_s, ..., t+(rows-1)T_s."""
        times = np.asarray(self.times)
        values = np.asarray(self.values)
        grid = t + T_s * np.arange(rows)
        index = np.searchsorted(times, grid + 1e-9, side="right") - 1
        return values[np.maximum(index, 0)]

    def is_staggered(self) -> bool:
        """No breakpoint changes both channels at once."""
        return all(
            not (prev[0] != cur[0] and prev[1] != cur[1])
            for prev, cur in zip(self.values, self.values[1:])
        )

    def shifted(self, offset: Sequence[float]) -> "SetpointSchedule":
        return SetpointSchedule(
            times=self.times,
            values=tuple((v[0] + offset[0], v[1] + offset[1]) for v in self.values),
        )


@dataclass
class Protocol:
    """Scenario: setpoints, operating point, bounds, tuning and plant truth."""
    schedule: SetpointSchedule
    duration: float
    T_s: float
    bounds: Tuple[float, float]
    u_s: np.ndarray
    d_s: np.ndarray
    T_c: float
    mpc: MpcConfig
    plant_params: ModelParams
    presets: dict = field(default_factory=dict)


def schedule_for(schedule, params: ModelParams, u_s, d_s) -> SetpointSchedule:
    """Resolve a configured schedule: ``"staggered"`` steps around the CV levels at
    (u_s, d_s), or explicit ``[t, zbar1, zbar2]`` breakpoints."""
    if schedule == "staggered":
        z_s = cv_output(steady_state(u_s, d_s, params), params)
        return SetpointSchedule.from_rows(COMPARISON_STEPS).shifted(z_s)
    return SetpointSchedule.from_rows(schedule)


def comparison_protocol(params: ModelParams = ESTIMATED) -> Protocol:
    """Staggered ±cm setpoint steps around the steady CV levels at u_s = (300, 300)."""
    u_s = np.array([300.0, 300.0])
    d_s = np.zeros(4)
    schedule = schedule_for("staggered", params, u_s, d_s)
    if not schedule.is_staggered():
        raise DomainError("the comparison schedule must step one tank at a time")
    mpc = MpcConfig(Q=np.diag([10.0, 10.0]), S=np.diag([1.0, 1.0]), N_c=160, T_s=5.0,
                    bounds=(160.0, 350.0))
    return Protocol(
        schedule=schedule,
        duration=COMPARISON_DURATION,
        T_s=5.0,
        bounds=(160.0, 350.0),
        u_s=u_s,
        d_s=d_s,
        T_c=50.0,
        mpc=mpc,
        plant_params=params,
        presets={"plant": "estimated", "model": "estimated", "filter": "filter_tuning"},
    )
