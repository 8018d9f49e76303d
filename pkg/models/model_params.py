"""Quadruple-tank parameter vector with JSON serialization."""

from dataclasses import dataclass, asdict, replace
from functools import cached_property
from typing import Dict, List, Sequence, Tuple
import json
import math

import numpy as np

from utils.errors import DomainError

# Parameter names addressable by estimation masks and report tables.
VECTOR_FIELDS = ("a", "A", "gamma", "sigma", "sigma_d", "r2")
SCALAR_FIELDS = ("rho", "g_a")

UNITS = {
    "a": "cm^2",
    "A": "cm^2",
    "gamma": "-",
    "sigma": "g/sqrt(s)",
    "sigma_d": "cm^3/(s sqrt(s))",
    "r2": "cm^2",
    "rho": "g/cm^3",
    "g_a": "cm/s^2",
}


def split_name(name: str) -> Tuple[str, int]:
    """Split ``"a3"`` into ``("a", 2)``; scalars return index -1."""
    if name in SCALAR_FIELDS:
        return name, -1
    for prefix in sorted(VECTOR_FIELDS, key=len, reverse=True):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return prefix, int(name[len(prefix):]) - 1
    raise KeyError(f"unknown parameter name: {name!r}")


@dataclass(frozen=True)
class ModelParams:
    """Time-invariant parameters of the four-tank model.

    Units are fixed: cm, g, s. Instances are immutable; derive variants with
    ``with_values``.
    """
    a: Tuple[float, ...] = (1.131, 1.131, 1.131, 1.131)
    A: Tuple[float, ...] = (380.133, 380.133, 380.133, 380.133)
    gamma: Tuple[float, ...] = (0.35, 0.35)
    rho: float = 1.0
    g_a: float = 981.0
    sigma: Tuple[float, ...] = (10.07e-3, 13.09e-3, 12.50e-3, 16.62e-3)
    sigma_d: Tuple[float, ...] = (0.47, 3.08, 3.92, 3.42)
    r2: Tuple[float, ...] = (1.44e-2, 1.34e-2, 1.00e-5, 1.00e-5)

    def __post_init__(self):
        # Normalize lists coming from JSON into tuples of floats.
        for name in VECTOR_FIELDS:
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "g_a", float(self.g_a))

    def validate(self) -> "ModelParams":
        expected = {"a": 4, "A": 4, "gamma": 2, "sigma": 4, "sigma_d": 4, "r2": 4}
        for name, size in expected.items():
            values = getattr(self, name)
            if len(values) != size:
                raise DomainError(f"{name} needs {size} entries, got {len(values)}")
            if not all(math.isfinite(v) for v in values):
                raise DomainError(f"{name} has non-finite entries: {values}")
        if min(self.a) <= 0 or min(self.A) <= 0:
            raise DomainError("cross-sections a and A must be positive")
        if self.rho <= 0 or self.g_a <= 0:
            raise DomainError("rho and g_a must be positive")
        if not all(0.0 < g < 1.0 for g in self.gamma):
            raise DomainError(f"valve fractions must lie in (0, 1), got {self.gamma}")
        if min(self.sigma) < 0 or min(self.sigma_d) < 0:
            raise DomainError("diffusion coefficients must be non-negative")
        if min(self.r2) <= 0:
            raise DomainError("measurement variances r2 must be positive")
        return self

    # ------------------------------------------------------------------
    # Cached numpy views used by the hot numerical paths
    # ------------------------------------------------------------------

    @cached_property
    def a_vec(self) -> np.ndarray:
        return np.array(self.a)

    @cached_property
    def A_vec(self) -> np.ndarray:
        return np.array(self.A)

    @cached_property
    def outflow_coefficients(self) -> np.ndarray:
        """k_i such that q_out,i = k_i * sqrt(m_i)."""
        return self.a_vec * np.sqrt(2.0 * self.g_a / (self.rho * self.A_vec))

    @cached_property
    def level_scale(self) -> np.ndarray:
        """1/(rho A_i): mass [g] to level [cm]."""
        return 1.0 / (self.rho * self.A_vec)

    @cached_property
    def input_matrix(self) -> np.ndarray:
        g1, g2 = self.gamma
        return self.rho * np.array([
            [g1, 0.0],
            [0.0, g2],
            [0.0, 1.0 - g2],
            [1.0 - g1, 0.0],
        ])

    @cached_property
    def meas_cov(self) -> np.ndarray:
        return np.diag(self.r2)

    # ------------------------------------------------------------------
    # Named access for estimation masks
    # ------------------------------------------------------------------

    def get(self, name: str) -> float:
        base, index = split_name(name)
        value = getattr(self, base)
        return value if index < 0 else value[index]

    def with_values(self, values: Dict[str, float]) -> "ModelParams":
        """Return a copy with the named entries (``"a1"``, ``"gamma2"``...) replaced."""
        updates: Dict[str, object] = {}
        for name, v in values.items():
            base, index = split_name(name)
            if index < 0:
                updates[base] = float(v)
                continue
            current = list(updates.get(base, getattr(self, base)))
            current[index] = float(v)
            updates[base] = tuple(current)
        return replace(self, **updates)

    def with_noise_from(self, other: "ModelParams") -> "ModelParams":
        """Copy with the diffusion and measurement-noise description of ``other``."""
        return replace(self, sigma=other.sigma, sigma_d=other.sigma_d, r2=other.r2)

    @staticmethod
    def names_for(base: str) -> List[str]:
        size = 2 if base == "gamma" else 4
        return [f"{base}{i + 1}" for i in range(size)]

    # ------------------------------------------------------------------
    # Serialization
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in VECTOR_FIELDS:
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelParams":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})

    def save_json(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"schema": 1, "params": self.to_dict()}, f, indent=2)

    @classmethod
    def load_json(cls, path: str) -> "ModelParams":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        # Accept both the wrapped form written by save_json and a bare dict.
        return cls.from_dict(data.get("params", data)).validate()


def params_table(rows: Sequence[Tuple[str, ModelParams]],
                 names: Sequence[str]) -> List[List[str]]:
    """Tabulate named parameters side by side: one row per name, one column per θ."""
    table = [["Parameter"] + [label for label, _ in rows] + ["Unit"]]
    for name in names:
        base, _ = split_name(name)
        table.append([name] + [f"{p.get(name):.6g}" for _, p in rows] + [UNITS[base]])
    return table
