"""Delimited study outputs.

Every file starts with the format marker ``# pwap-csv v1`` followed by a
header row; columns are never reordered without bumping that marker. Floats
are written with shortest round-trip repr, so identical runs produce
byte-identical files.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .archive import _atomic_write

FORMAT_LINE = "# pwap-csv v1"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value).replace(",", ";").replace("\n", " ")


def write_csv(path, columns, rows):
    """Write dict rows under a fixed column list; missing keys become blank."""
    path = Path(path)
    lines = [FORMAT_LINE, ",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(row.get(c)) for c in columns))
    payload = ("\n".join(lines) + "\n").encode()
    _atomic_write(path, payload)


def read_csv(path):
    """Inverse of write_csv: returns (columns, list of string-valued dicts)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != FORMAT_LINE:
        raise ValueError(f"{path}: not a pwap csv file")
    columns = lines[1].split(",")
    rows = [dict(zip(columns, line.split(","))) for line in lines[2:] if line]
    return columns, rows
