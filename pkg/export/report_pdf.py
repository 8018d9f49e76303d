"""PDF report: comparison table, histograms and per-run trajectories with ReportLab."""

import logging
from io import BytesIO
from typing import Optional, Sequence

from PIL import Image
from reportlab.lib.pagesizes import A4, letter
from reportlab.lib.units import mm
from reportlab.lib.utils import ImageReader
from reportlab.pdfgen import canvas as rl_canvas

from experiment.compare import ComparisonTable, compare
from experiment.metrics import DEFAULT_BINS, error_histograms
from export.figure_renderer import render_histograms, render_trajectory
from models.run_record import RunRecord
from utils.chart_utils import compute_scale_factor
from utils.errors import DomainError

logger = logging.getLogger(__name__)

MARGIN_MM = 15
LINE_HEIGHT = 14
# Standard PDF fonts only cover Latin-1.
_ASCII = str.maketrans({"Δ": "d", "γ": "g", "λ": "L", "ē": "e", "θ": "th"})


def _get_page_size(name: str):
    """Return ReportLab page size tuple."""
    return A4 if name.lower() == "a4" else letter


def _place_image(c, img: Image.Image, x: float, y_top: float, box_w: float, box_h: float) -> float:
    """Draw ``img`` scaled into the box whose top-left is (x, y_top); returns its height."""
    img = img.convert("RGB")
    buffer = BytesIO()
    img.save(buffer, format="PNG")
    buffer.seek(0)
    scale = compute_scale_factor(img.width, img.height, box_w, box_h)
    draw_w, draw_h = img.width * scale, img.height * scale
    c.drawImage(ImageReader(buffer), x, y_top - draw_h, draw_w, draw_h)
    return draw_h


def _draw_lines(c, lines: Sequence[str], x: float, y: float, font: str = "Helvetica",
                size: int = 10) -> float:
    c.setFont(font, size)
    for line in lines:
        c.drawString(x, y, line.translate(_ASCII).encode("latin-1", "replace").decode("latin-1"))
        y -= LINE_HEIGHT
    return y


def export_report(records: Sequence[RunRecord], output_path: str, page_size: str = "a4",
                  bins: int = DEFAULT_BINS, notes: Optional[Sequence[str]] = None,
                  title: str = "Quadruple-tank controller comparison") -> ComparisonTable:
    """Write a multi-page PDF report and return the table it contains.

    Page 1 holds the comparison table, any ``notes`` and the shared-bin
    histograms; each record then gets a page with its level and input
    trajectories.
    """
    if not records:
        raise DomainError("a report needs at least one run record")
    table = compare(records)
    page_w, page_h = _get_page_size(page_size)
    margin = MARGIN_MM * mm
    usable_w = page_w - 2 * margin

    c = rl_canvas.Canvas(output_path, pagesize=(page_w, page_h))
    c.setTitle(title)

    # --- Summary page ---
    y = page_h - margin
    c.setFont("Helvetica-Bold", 16)
    c.drawString(margin, y - 16, title)
    y -= 40
    y = _draw_lines(c, table.to_text().splitlines(), margin, y, font="Courier", size=10)
    y -= LINE_HEIGHT
    for record in records:
        meta = record.metadata
        status = "completed" if meta.completed else f"incomplete ({meta.note})"
        y = _draw_lines(c, [f"{meta.controller or 'run'}: seed={meta.seed} T_s={meta.T_s:g} s "
                            f"plant={meta.plant_preset} model={meta.model_preset} {status}"],
                        margin, y, size=8)
    if notes:
        y -= LINE_HEIGHT / 2
        y = _draw_lines(c, notes, margin, y, size=9)
    y -= LINE_HEIGHT
    histogram = render_histograms(error_histograms(records, bins))
    _place_image(c, histogram, margin, y, usable_w, y - margin)
    c.showPage()

    # --- One page per run ---
    for record in records:
        c.setFont("Helvetica-Bold", 12)
        c.drawString(margin, page_h - margin - 12, f"{record.controller.upper() or 'Run'} trajectories")
        figure = render_trajectory(record)
        _place_image(c, figure, margin, page_h - margin - 24, usable_w, page_h - 2 * margin - 24)
        c.showPage()

    c.save()
    logger.info("Wrote report with %d run(s) to %s", len(records), output_path)
    return table
