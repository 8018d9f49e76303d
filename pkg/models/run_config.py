"""Run configuration data models with JSON serialization."""

from dataclasses import dataclass, field, asdict
from typing import List, Optional
import json
import os

from models.presets import resolve_params
from utils.errors import ConfigError

SCHEMA_VERSION = 1
CONTROLLERS = ("pid", "lmpc", "nmpc")


@dataclass
class PidSettings:
    T_c: float = 50.0
    derivative_filter: float = 10.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PidSettings":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class MpcSettings:
    """Diagonal tracking and move weights, horizon and SQP limits."""
    Q: List[float] = field(default_factory=lambda: [10.0, 10.0])
    S: List[float] = field(default_factory=lambda: [1.0, 1.0])
    N_c: int = 160
    max_sqp_iterations: int = 30
    step_tolerance: float = 1e-6

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MpcSettings":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class FilterSettings:
    p0_diag: List[float] = field(default_factory=lambda: [1e2] * 4 + [1e1] * 4)
    rk4_steps: int = 10

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FilterSettings":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class ExcitationSettings:
    """Open-loop identification experiment."""
    duration: float = 10000.0
    hold_range: List[int] = field(default_factory=lambda: [12, 60])
    level_range: List[float] = field(default_factory=lambda: [200.0, 330.0])
    validation_fraction: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExcitationSettings":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class EstimationSettings:
    free: List[str] = field(default_factory=lambda: ["a1", "a2", "a3", "a4", "gamma1", "gamma2"])
    initial_preset: str = "nominal"
    starts: int = 3
    xatol: float = 1e-6
    fatol: float = 1e-9
    max_evaluations: int = 2000
    rk4_steps: int = 10
    # Disturbance intensities held while identifying; null keeps the initial preset's.
    sigma_d: Optional[List[float]] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    workers: int = 1

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EstimationSettings":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class RunConfig:
    """Everything a command needs: presets, timing, tuning, schedule and seed.

    ``schedule`` is either ``"staggered"`` or a list of ``[t, zbar1, zbar2]``
    breakpoints. ``disturbance`` is a constant unmodelled inflow added to the
    plant only, optionally switched on at ``disturbance_start``.
    """
    seed: Optional[int] = None
    plant_preset: str = "estimated"
    model_preset: str = "estimated"
    filter_preset: str = "filter_tuning"
    controller: str = "lmpc"
    T_s: float = 5.0
    duration: float = 3300.0
    plant_substeps: int = 10
    noise_free: bool = False
    u_s: List[float] = field(default_factory=lambda: [300.0, 300.0])
    d_s: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    bounds: List[float] = field(default_factory=lambda: [160.0, 350.0])
    disturbance: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    disturbance_start: float = 0.0
    schedule: object = "staggered"
    output_dir: str = "runs"
    pid: PidSettings = field(default_factory=PidSettings)
    mpc: MpcSettings = field(default_factory=MpcSettings)
    filter: FilterSettings = field(default_factory=FilterSettings)
    excitation: ExcitationSettings = field(default_factory=ExcitationSettings)
    estimation: EstimationSettings = field(default_factory=EstimationSettings)

    def validate(self) -> "RunConfig":
        if self.seed is None:
            raise ConfigError("a seed is required (set \"seed\" in the config or pass --seed)")
        for preset in (self.plant_preset, self.model_preset, self.filter_preset,
                       self.estimation.initial_preset):
            resolve_params(preset)
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"unknown controller {self.controller!r}; expected one of {CONTROLLERS}")
        if self.T_s <= 0 or self.duration <= 0:
            raise ConfigError("T_s and duration must be positive")
        if abs(self.duration / self.T_s - round(self.duration / self.T_s)) > 1e-9:
            raise ConfigError(f"duration {self.duration} must be a multiple of T_s {self.T_s}")
        if len(self.bounds) != 2 or not self.bounds[0] < self.bounds[1]:
            raise ConfigError(f"bounds must be [lb, ub] with lb < ub, got {self.bounds}")
        if len(self.u_s) != 2 or len(self.d_s) != 4 or len(self.disturbance) != 4:
            raise ConfigError("u_s needs 2 entries; d_s and disturbance need 4")
        if self.estimation.sigma_d is not None and len(self.estimation.sigma_d) != 4:
            raise ConfigError(f"estimation.sigma_d needs 4 entries, got {self.estimation.sigma_d}")
        if self.estimation.workers < 1:
            raise ConfigError("estimation.workers must be at least 1")
        if not all(self.bounds[0] <= u <= self.bounds[1] for u in self.u_s):
            raise ConfigError(f"operating input {self.u_s} lies outside the bounds {self.bounds}")
        if len(self.mpc.Q) != 2 or len(self.mpc.S) != 2:
            raise ConfigError("mpc.Q and mpc.S take the two diagonal entries")
        if self.mpc.N_c < 1 or self.pid.T_c <= 0:
            raise ConfigError("mpc.N_c must be >= 1 and pid.T_c positive")
        if len(self.filter.p0_diag) != 8:
            raise ConfigError("filter.p0_diag needs 8 entries")
        if self.schedule != "staggered":
            if not isinstance(self.schedule, list) or not self.schedule:
                raise ConfigError("schedule must be \"staggered\" or a list of [t, zbar1, zbar2]")
            if any(len(row) != 3 for row in self.schedule):
                raise ConfigError("every schedule breakpoint needs [t, zbar1, zbar2]")
        return self

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None,
                       controller: Optional[str] = None,
                       preset: Optional[str] = None) -> "RunConfig":
        """Apply command-line flags on top of the file values."""
        d = self.to_dict()
        if seed is not None:
            d["seed"] = seed
        if output_dir is not None:
            d["output_dir"] = output_dir
        if controller is not None:
            d["controller"] = controller
        if preset is not None:
            d["plant_preset"] = preset
            d["model_preset"] = preset
        return RunConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema"] = SCHEMA_VERSION
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)  # avoid mutating the input
        schema = d.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema {schema}; expected {SCHEMA_VERSION}")
        nested = {
            "pid": PidSettings,
            "mpc": MpcSettings,
            "filter": FilterSettings,
            "excitation": ExcitationSettings,
            "estimation": EstimationSettings,
        }
        sections = {name: d.pop(name, {}) for name in nested}
        config = cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})
        for name, section_cls in nested.items():
            setattr(config, name, section_cls.from_dict(sections[name] or {}))
        return config

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load_json(cls, path: str) -> "RunConfig":
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{path} is not valid JSON: {err}") from err
        return cls.from_dict(data)
