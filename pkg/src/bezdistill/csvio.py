"""Plain CSV with leading ``#`` comment lines.

Floats are written with 17 significant digits, which round-trips float64
exactly.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: str | Path, numeric: bool = True):
    """Return ``(comment_lines, header, rows)``; rows is a float array when numeric."""
    comments, lines = [], []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#") and not lines:
                comments.append(line[1:].strip())
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [r for r in reader if r]
    if numeric:
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
        return comments, header, data
    return comments, header, rows
