"""Deterministic CSV emission shared by the reporting paths.

Numbers are printed with 12 significant digits so CSVs from repeated runs
compare byte-for-byte and still resolve the reference values, which are
quoted to at most 8 digits.
"""

from __future__ import annotations

import os

__all__ = ["format_number", "write_csv"]


def format_number(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    v = float(value)
    if v == 0.0:
        v = 0.0  # normalize -0.0
    return "%.12g" % v


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(
            cell if isinstance(cell, str) else format_number(cell) for cell in row
        ))
    text = "\n".join(lines) + "\n"
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
