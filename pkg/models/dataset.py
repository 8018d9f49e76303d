"""Identification dataset: sampled levels and pump flows, with CSV load/save."""

import csv
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from utils.errors import DomainError

DATASET_HEADERS: List[str] = ["t", "y1", "y2", "y3", "y4", "u1", "u2"]


def format_float(value: float) -> str:
    """Shortest repr that round-trips exactly; keeps reruns byte-identical."""
    return repr(float(value))


@dataclass(frozen=True)
class Dataset:
    """N samples of time [s], levels Y [cm] and inputs U [cm³/s].

    U[k] is the input held over [t_k, t_k+1); the last row's input is logged
    but never acts on the data.
    """
    t: np.ndarray
    Y: np.ndarray
    U: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t", np.asarray(self.t, dtype=float))
        object.__setattr__(self, "Y", np.asarray(self.Y, dtype=float))
        object.__setattr__(self, "U", np.asarray(self.U, dtype=float))

    def validate(self) -> "Dataset":
        n = len(self.t)
        if n < 2:
            raise DomainError(f"a dataset needs at least 2 samples, got {n}")
        if self.Y.shape != (n, 4) or self.U.shape != (n, 2):
            raise DomainError(
                f"dataset shapes disagree: t {self.t.shape}, Y {self.Y.shape}, U {self.U.shape}"
            )
        dt = np.diff(self.t)
        if np.any(dt <= 0):
            raise DomainError("dataset timestamps must be strictly increasing")
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-9):
            raise DomainError("dataset timestamps must be uniformly spaced")
        return self

    @property
    def size(self) -> int:
        return len(self.t)

    @property
    def T_s(self) -> float:
        return float(self.t[1] - self.t[0])

    def split(self, fraction: float = 0.5) -> Tuple["Dataset", "Dataset"]:
        """Estimation/validation split; the second part keeps its own time axis."""
        cut = int(round(self.size * fraction))
        if cut < 2 or self.size - cut < 2:
            raise DomainError(f"split at {fraction} leaves fewer than 2 samples on one side")
        head = Dataset(self.t[:cut], self.Y[:cut], self.U[:cut])
        tail = Dataset(self.t[cut:], self.Y[cut:], self.U[cut:])
        return head, tail

    # ------------------------------------------------------------------
    # CSV persistence
    # ------------------------------------------------------------------

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(DATASET_HEADERS)
            for k in range(self.size):
                row = [self.t[k], *self.Y[k], *self.U[k]]
                writer.writerow([format_float(v) for v in row])

    @classmethod
    def load(cls, path: str) -> "Dataset":
        """Load a dataset CSV (utf-8 with optional BOM)."""
        with open(path, "r", encoding="utf-8-sig", newline="") as f:
            reader = csv.DictReader(f)
            missing = [h for h in DATASET_HEADERS if h not in (reader.fieldnames or [])]
            if missing:
                raise DomainError(f"{path}: missing dataset columns {missing}")
            rows = list(reader)
        try:
            data = np.array([[float(r[h]) for h in DATASET_HEADERS] for r in rows])
        except ValueError as err:
            raise DomainError(f"{path}: non-numeric dataset entry ({err})") from err
        if data.ndim != 2 or len(data) < 2:
            raise DomainError(f"{path}: a dataset needs at least 2 rows")
        return cls(t=data[:, 0], Y=data[:, 1:5], U=data[:, 5:7]).validate()
