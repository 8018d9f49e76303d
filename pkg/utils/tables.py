"""Fixed-width rendering of small text tables."""

from typing import List, Sequence


def format_table(rows: Sequence[Sequence[str]], rule: bool = True) -> str:
    """First column left-aligned, the rest right-aligned; ``rows[0]`` is the header."""
    rows = [[str(cell) for cell in row] for row in rows]
    if not rows:
        return ""
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines: List[str] = []
    for n, row in enumerate(rows):
        cells = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
        if n == 0 and rule:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)
