"""Renders trajectory and histogram figures using Pillow."""

from typing import List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image, ImageDraw

from experiment.metrics import Histograms
from models.run_record import RunRecord
from utils.chart_utils import data_to_pixel, nice_ticks, padded_limits
from utils.fonts import load_font

FIGURE_SIZE = (1600, 1000)
MARGIN = (110, 40, 30, 70)  # left, top, right, bottom (pixels)
SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"]
SETPOINT_COLOR = "#555555"
BOUND_COLOR = "#999999"
CONTROLLER_COLORS = {"pid": "#d62728", "lmpc": "#1f77b4", "nmpc": "#2ca02c"}


class Panel:
    """One axes box inside a figure image."""

    def __init__(self, draw: ImageDraw.ImageDraw, box: Tuple[int, int, int, int],
                 xlim: Tuple[float, float], ylim: Tuple[float, float], font_size: int = 18):
        self.draw = draw
        self.box = box
        self.xlim = xlim
        self.ylim = ylim
        self.font = load_font(font_size)

    def to_pixels(self, x, y) -> List[Tuple[float, float]]:
        x0, y0, x1, y1 = self.box
        px = data_to_pixel(x, self.xlim[0], self.xlim[1], x0, x1)
        py = data_to_pixel(y, self.ylim[0], self.ylim[1], y1, y0)
        return list(zip(np.atleast_1d(px).tolist(), np.atleast_1d(py).tolist()))

    def frame(self, title: str = "", xlabel: str = "", ylabel: str = "") -> None:
        x0, y0, x1, y1 = self.box
        for tick in nice_ticks(*self.ylim):
            (_, py), = self.to_pixels(self.xlim[0], tick)
            self.draw.line([(x0, py), (x1, py)], fill="#e6e6e6", width=1)
            self.draw.text((x0 - 8, py), f"{tick:g}", fill="black", font=self.font, anchor="rm")
        for tick in nice_ticks(*self.xlim):
            (px, _), = self.to_pixels(tick, self.ylim[0])
            self.draw.line([(px, y1), (px, y1 + 6)], fill="black", width=1)
            self.draw.text((px, y1 + 8), f"{tick:g}", fill="black", font=self.font, anchor="ma")
        self.draw.rectangle(self.box, outline="black", width=2)
        if title:
            self.draw.text(((x0 + x1) / 2, y0 - 6), title, fill="black", font=self.font, anchor="md")
        if xlabel:
            self.draw.text(((x0 + x1) / 2, y1 + 34), xlabel, fill="black", font=self.font, anchor="ma")
        if ylabel:
            self.draw.text((x0 - 70, y0 - 6), ylabel, fill="black", font=self.font, anchor="ld")

    def line(self, x, y, color: str, width: int = 2) -> None:
        points = self.to_pixels(x, y)
        if len(points) > 1:
            self.draw.line(points, fill=color, width=width)

    def step(self, x, y, color: str, width: int = 2) -> None:
        """Zero-order-hold staircase through (x_k, y_k)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.size < 2:
            return
        xs = np.repeat(x, 2)[1:]
        ys = np.repeat(y, 2)[:-1]
        self.line(xs, ys, color, width)

    def bars(self, edges, counts, color: str, slot: int = 0, slots: int = 1) -> None:
        """Histogram bars; ``slot`` of ``slots`` side-by-side groups per bin."""
        edges = np.asarray(edges, dtype=float)
        width = (edges[1:] - edges[:-1]) / slots
        for lo, w, c in zip(edges[:-1], width, counts):
            if c <= 0:
                continue
            left = lo + slot * w
            (px0, py0), (px1, py1) = self.to_pixels([left, left + w], [c, 0.0])
            self.draw.rectangle([px0, py0, max(px1 - 1, px0), py1], fill=color)

    def legend(self, entries: Sequence[Tuple[str, str]]) -> None:
        x0, y0, x1, _ = self.box
        y = y0 + 10
        for label, color in entries:
            self.draw.line([(x1 - 150, y + 9), (x1 - 115, y + 9)], fill=color, width=4)
            self.draw.text((x1 - 108, y), label, fill="black", font=self.font)
            y += 26


def _panel_boxes(size: Tuple[int, int], rows: int, cols: int = 1) -> List[Tuple[int, int, int, int]]:
    width, height = size
    left, top, right, bottom = MARGIN
    cell_w = (width) / cols
    cell_h = (height) / rows
    boxes = []
    for r in range(rows):
        for c in range(cols):
            boxes.append((int(c * cell_w + left), int(r * cell_h + top),
                          int((c + 1) * cell_w - right), int((r + 1) * cell_h - bottom)))
    return boxes


def render_trajectory(record: RunRecord, size: Tuple[int, int] = FIGURE_SIZE,
                      bounds: Optional[Tuple[float, float]] = None) -> Image.Image:
    """Levels y1, y2 against their setpoints (top) and inputs u1, u2 (bottom)."""
    figure = Image.new("RGB", size, "white")
    draw = ImageDraw.Draw(figure)
    t = record.t / 60.0
    xlim = (float(t[0]), float(t[-1])) if record.rows > 1 else (0.0, 1.0)
    bounds = bounds or tuple(record.metadata.bounds)
    top, bottom = _panel_boxes(size, rows=2)

    levels = Panel(draw, top, xlim, padded_limits(np.concatenate([record.y[:, :2].ravel(),
                                                                   record.zbar.ravel()])))
    levels.frame(title=f"{record.controller.upper() or 'run'}: controlled levels",
                 ylabel="h [cm]")
    for i in range(2):
        levels.step(t, record.zbar[:, i], SETPOINT_COLOR, width=2)
        levels.line(t, record.y[:, i], SERIES_COLORS[i], width=2)
    levels.legend([("y1", SERIES_COLORS[0]), ("y2", SERIES_COLORS[1]), ("setpoint", SETPOINT_COLOR)])

    inputs = Panel(draw, bottom, xlim, padded_limits(np.concatenate([record.u.ravel(), bounds])))
    inputs.frame(xlabel="t [min]", ylabel="u [cm³/s]")
    for b in bounds:
        inputs.line(xlim, [b, b], BOUND_COLOR, width=1)
    for i in range(2):
        inputs.step(t, record.u[:, i], SERIES_COLORS[i], width=2)
    inputs.legend([("u1", SERIES_COLORS[0]), ("u2", SERIES_COLORS[1])])
    return figure


def render_histograms(hist: Histograms, size: Tuple[int, int] = FIGURE_SIZE) -> Image.Image:
    """Tracking-error and input-move histograms, one bar colour per controller."""
    figure = Image.new("RGB", size, "white")
    draw = ImageDraw.Draw(figure)
    names = hist.controllers
    colors = {n: CONTROLLER_COLORS.get(n, SERIES_COLORS[i % len(SERIES_COLORS)])
              for i, n in enumerate(names)}
    panels = (
        ("Tracking error", "ē [cm]", hist.error_edges, hist.error_counts),
        ("Input moves", "Δu [cm³/s]", hist.move_edges, hist.move_counts),
    )
    for box, (title, xlabel, edges, counts) in zip(_panel_boxes(size, rows=2), panels):
        peak = max((int(np.max(c)) for c in counts.values() if len(c)), default=1)
        panel = Panel(draw, box, (float(edges[0]), float(edges[-1])), (0.0, max(peak, 1) * 1.08))
        panel.frame(title=title, xlabel=xlabel, ylabel="count")
        for slot, name in enumerate(names):
            panel.bars(edges, counts[name], colors[name], slot=slot, slots=len(names))
        panel.legend([(n.upper(), colors[n]) for n in names])
    return figure
