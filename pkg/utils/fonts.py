"""Font lookup for figure labels (Linux, macOS and Windows system fonts)."""

import os
import sys
from functools import lru_cache
from typing import List

from PIL import ImageFont

_CANDIDATES = ("DejaVuSans.ttf", "Arial.ttf", "arial.ttf", "LiberationSans-Regular.ttf",
               "Helvetica.ttc")


def _font_dirs() -> List[str]:
    if sys.platform == "win32":
        return [os.path.join(os.environ.get("WINDIR", r"C:\Windows"), "Fonts")]
    dirs = []
    for d in ("/usr/share/fonts", "/usr/local/share/fonts", "/Library/Fonts",
              "/System/Library/Fonts", os.path.expanduser("~/.fonts")):
        if os.path.isdir(d):
            # Linux fonts are often nested
            dirs.extend(root for root, _, _ in os.walk(d))
    return dirs


@lru_cache(maxsize=1)
def find_label_font() -> str:
    """Path of the first sans-serif candidate found, or "" when none is installed."""
    for directory in _font_dirs():
        for name in _CANDIDATES:
            path = os.path.join(directory, name)
            if os.path.isfile(path):
                return path
    return ""


@lru_cache(maxsize=16)
def load_font(size: int):
    """TrueType font at ``size`` pixels, falling back to Pillow's bitmap font."""
    path = find_label_font()
    if path:
        try:
            return ImageFont.truetype(path, size)
        except (OSError, IOError):
            pass
    for fallback in _CANDIDATES:
        try:
            return ImageFont.truetype(fallback, size)
        except (OSError, IOError):
            continue
    return ImageFont.load_default(size=size)
