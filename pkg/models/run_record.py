"""Closed-loop run log: per-sample rows as CSV plus a JSON metadata sidecar."""

import csv
import json
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np

from models.dataset import format_float
from utils.errors import DomainError

RECORD_HEADERS: List[str] = (
    ["t", "zbar1", "zbar2"]
    + [f"y{i}" for i in range(1, 5)]
    + ["u1", "u2"]
    + [f"xhat{i}" for i in range(1, 5)]
    + [f"dhat{i}" for i in range(1, 5)]
)


@dataclass
class RunMetadata:
    controller: str = ""
    plant_preset: str = ""
    model_preset: str = ""
    filter_preset: str = ""
    seed: Optional[int] = None
    T_s: float = 5.0
    duration: float = 0.0
    bounds: List[float] = field(default_factory=lambda: [160.0, 350.0])
    completed: bool = True
    note: str = ""

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunMetadata":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass
class RunRecord:
    """Samples at t_k: setpoint, measured levels, applied input and filtered estimate."""
    t: np.ndarray
    zbar: np.ndarray
    y: np.ndarray
    u: np.ndarray
    xhat: np.ndarray
    dhat: np.ndarray
    metadata: RunMetadata = field(default_factory=RunMetadata)

    @property
    def rows(self) -> int:
        return len(self.t)

    @property
    def controller(self) -> str:
        return self.metadata.controller

    @property
    def tracking_error(self) -> np.ndarray:
        """ē_k = z̄_k - [y1; y2]_k on the measured levels."""
        return self.zbar - self.y[:, :2]

    def table(self) -> np.ndarray:
        return np.hstack([self.t[:, None], self.zbar, self.y, self.u, self.xhat, self.dhat])

    @staticmethod
    def sidecar_path(path: str) -> str:
        stem = path[:-4] if path.lower().endswith(".csv") else path
        return stem + ".json"

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(RECORD_HEADERS)
            for row in self.table():
                writer.writerow([format_float(v) for v in row])
        with open(self.sidecar_path(path), "w", encoding="utf-8") as f:
            json.dump({"schema": 1, "run": self.metadata.to_dict()}, f, indent=2)

    @classmethod
    def load(cls, path: str) -> "RunRecord":
        with open(path, "r", encoding="utf-8-sig", newline="") as f:
            reader = csv.DictReader(f)
            missing = [h for h in RECORD_HEADERS if h not in (reader.fieldnames or [])]
            if missing:
                raise DomainError(f"{path}: missing run-record columns {missing}")
            data = np.array([[float(r[h]) for h in RECORD_HEADERS] for r in reader])
        if data.size == 0:
            raise DomainError(f"{path}: run record has no rows")
        metadata = RunMetadata()
        try:
            with open(cls.sidecar_path(path), "r", encoding="utf-8") as f:
                metadata = RunMetadata.from_dict(json.load(f).get("run", {}))
        except FileNotFoundError:
            pass
        return cls(t=data[:, 0], zbar=data[:, 1:3], y=data[:, 3:7], u=data[:, 7:9],
                   xhat=data[:, 9:13], dhat=data[:, 13:17], metadata=metadata)


class RunRecorder:
    """Accumulates rows during a run; ``build`` works on partial runs too."""

    def __init__(self, metadata: RunMetadata):
        self.metadata = metadata
        self._rows: List[np.ndarray] = []

    def append(self, t: float, zbar, y, u, xhat, dhat) -> None:
        self._rows.append(np.concatenate([[t], zbar, y, u, xhat, dhat]).astype(float))

    def __len__(self) -> int:
        return len(self._rows)

    def build(self) -> RunRecord:
        data = np.array(self._rows).reshape(-1, len(RECORD_HEADERS))
        return RunRecord(t=data[:, 0], zbar=data[:, 1:3], y=data[:, 3:7], u=data[:, 7:9],
                         xhat=data[:, 9:13], dhat=data[:, 13:17], metadata=self.metadata)
