"""Rendering of result tables: pipe-delimited text for people, JSON for machines."""

from __future__ import annotations

import json
import math
from typing import Any, Sequence

ABSENT = "---"


def format_number(x: Any) -> str:
    if x is None:
        return ABSENT
    if isinstance(x, bool):
        return "True" if x else "False"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        if math.isnan(x):
            return ABSENT
        return f"{x:.6g}"
    return str(x)


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Pipe-delimited table with aligned columns; ``None`` cells show as ``---``."""
    cells = [[format_number(v) for v in row] for row in rows]
    widths = [len(h) for h in headers]
    for row in cells:
        widths = [max(w, len(c)) for w, c in zip(widths, row)]

    def line(values):
        return "| " + " | ".join(v.ljust(w) for v, w in zip(values, widths)) + " |"

    out = [line(headers), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out.extend(line(r) for r in cells)
    return "\n".join(out) + "\n"


def dumps_machine(doc: Any) -> str:
    """Canonical JSON: sorted keys, full float precision, no NaN."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
