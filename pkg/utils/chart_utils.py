"""Data-to-pixel mapping and axis helpers for the Pillow figures."""

import math
from typing import List, Tuple

import numpy as np


def padded_limits(values, pad: float = 0.05, min_span: float = 1e-6) -> Tuple[float, float]:
    """Finite min/max of ``values`` widened by ``pad`` of the span."""
    data = np.asarray(values, dtype=float)
    data = data[np.isfinite(data)]
    if data.size == 0:
        return 0.0, 1.0
    lo, hi = float(data.min()), float(data.max())
    span = max(hi - lo, min_span)
    if hi - lo < min_span:
        lo -= span / 2
        hi += span / 2
    return lo - pad * span, hi + pad * span


def data_to_pixel(value, lo: float, hi: float, p0: float, p1: float):
    """Linear map of [lo, hi] onto [p0, p1]; works on arrays."""
    if hi == lo:
        return np.full_like(np.asarray(value, dtype=float), (p0 + p1) / 2)
    return p0 + (np.asarray(value, dtype=float) - lo) * (p1 - p0) / (hi - lo)


def nice_ticks(lo: float, hi: float, count: int = 5) -> List[float]:
    """Round tick positions (1, 2, 5 times a power of ten) inside [lo, hi]."""
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo or count < 1:
        return []
    raw = (hi - lo) / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = next(m * magnitude for m in (1, 2, 5, 10) if m * magnitude >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    value = first
    while value <= hi + 1e-9 * step:
        ticks.append(round(value, 12))
        value += step
    return ticks


def compute_scale_factor(image_width: int, image_height: int,
                         box_width: float, box_height: float) -> float:
    """Uniform scale that fits an image inside a box."""
    if image_width <= 0 or image_height <= 0:
        return 1.0
    return min(box_width / image_width, box_height / image_height)
