"""Side-by-side performance table for closed-loop runs."""

import csv
import io
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

from experiment.closed_loop import CONTROLLER_ORDER
from experiment.metrics import PerformanceReport, compute_metrics
from models.run_record import RunRecord
from utils.errors import DomainError
from utils.tables import format_table

logger = logging.getLogger(__name__)

COLUMNS = ["Control", "NISE", "NIAE", "NISΔU"]
CONTROL_LABELS = {"pid": "PID", "lmpc": "LMPC", "nmpc": "NMPC"}


def _fmt(value: Optional[float]) -> str:
    return "-" if value is None else f"{value:.3f}"


def _order_key(indexed):
    index, report = indexed
    name = report.controller
    rank = CONTROLLER_ORDER.index(name) if name in CONTROLLER_ORDER else len(CONTROLLER_ORDER)
    return rank, index


@dataclass
class ComparisonTable:
    reports: List[PerformanceReport]

    def get(self, controller: str) -> PerformanceReport:
        for report in self.reports:
            if report.controller == controller:
                return report
        raise KeyError(controller)

    def cells(self) -> List[List[str]]:
        return [
            [CONTROL_LABELS.get(r.controller, r.controller or "?"), _fmt(r.NISE), _fmt(r.NIAE), _fmt(r.NISDU)]
            for r in self.reports
        ]

    def to_text(self) -> str:
        return format_table([COLUMNS] + self.cells())

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(COLUMNS)
        for row in self.cells():
            writer.writerow(["" if c == "-" else c for c in row])
        return buffer.getvalue()

    def save_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(self.to_csv())
        logger.info("Wrote comparison table to %s", path)


def compare(records: Sequence[RunRecord]) -> ComparisonTable:
    """One row per record, PID then LMPC then NMPC, other names after."""
    if not records:
        raise DomainError("compare needs at least one run record")
    reports = [compute_metrics(r) for r in records]
    ordered = [report for _, report in sorted(enumerate(reports), key=_order_key)]
    return ComparisonTable(reports=ordered)
