"""Closed-loop performance measures and shared-bin histograms."""

import csv
import logging
from dataclasses import dataclass, field, asdict
from typing import Dict, List, Optional, Sequence

import numpy as np

from models.dataset import format_float
from models.run_record import RunRecord
from utils.errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 41


@dataclass
class PerformanceReport:
    """NISE [cm²], NIAE [cm], NISΔU [(cm³/s)²] over N error rows and M inputs."""
    controller: str
    NISE: float
    NIAE: float
    NISDU: Optional[float]
    N: int
    M: int

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PerformanceReport":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})


def input_moves(u: np.ndarray) -> np.ndarray:
    """Δu_j = u_j - u_{j-1} over consecutive applied inputs."""
    u = np.atleast_2d(np.asarray(u, dtype=float))
    return np.diff(u, axis=0)


def compute_metrics(record: RunRecord) -> PerformanceReport:
    if record.rows == 0:
        raise DomainError("cannot compute metrics on an empty run record")
    e = record.tracking_error
    N = len(e)
    M = len(record.u)
    nise = float(np.sum(e ** 2) / N)
    niae = float(np.sum(np.abs(e)) / N)
    nisdu = None
    if M >= 2:
        nisdu = float(np.sum(input_moves(record.u) ** 2) / (M - 1))
    return PerformanceReport(controller=record.controller, NISE=nise, NIAE=niae,
                             NISDU=nisdu, N=N, M=M)


# ---------------------------------------------------------------------------
# Histograms
# ---------------------------------------------------------------------------

@dataclass
class Histograms:
    """Counts per controller on bin edges shared by every record."""
    error_edges: np.ndarray
    move_edges: np.ndarray
    error_counts: Dict[str, np.ndarray] = field(default_factory=dict)
    move_counts: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def controllers(self) -> List[str]:
        return list(self.error_counts)

    def save_csv(self, path: str) -> None:
        """Long format: quantity, controller, bin_low, bin_high, count."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["quantity", "controller", "bin_low", "bin_high", "count"])
            for quantity, edges, counts in (("tracking_error", self.error_edges, self.error_counts),
                                            ("input_move", self.move_edges, self.move_counts)):
                for name, values in counts.items():
                    for lo, hi, c in zip(edges[:-1], edges[1:], values):
                        writer.writerow([quantity, name, format_float(lo), format_float(hi), int(c)])
        logger.info("Wrote histograms to %s", path)


def _symmetric_edges(samples: Sequence[np.ndarray], bins: int) -> np.ndarray:
    extent = max((float(np.max(np.abs(s))) for s in samples if s.size), default=0.0)
    if extent == 0.0:
        extent = 1.0
    return np.linspace(-extent, extent, bins + 1)


def error_histograms(records: Sequence[RunRecord], bins: int = DEFAULT_BINS) -> Histograms:
    """Histograms of ē (both channels pooled) and Δu (both inputs pooled).

    Bins are symmetric about zero and span the largest magnitude seen in any
    record, so the controllers can be compared bar for bar.
    """
    if not records:
        raise DomainError("error_histograms needs at least one run record")
    if bins < 1:
        raise DomainError(f"bins must be >= 1, got {bins}")
    errors = [r.tracking_error.ravel() for r in records]
    moves = [input_moves(r.u).ravel() for r in records]
    hist = Histograms(error_edges=_symmetric_edges(errors, bins),
                      move_edges=_symmetric_edges(moves, bins))
    for record, e, du in zip(records, errors, moves):
        name = record.controller or f"run{len(hist.error_counts) + 1}"
        hist.error_counts[name] = np.histogram(e, bins=hist.error_edges)[0]
        hist.move_counts[name] = np.histogram(du, bins=hist.move_edges)[0]
    return hist
