"""CSV reading and writing for observation matrices.

Format: one observation per row, ``d`` comma-separated floats with ``.`` as
decimal separator, optional single header row. Parsing never consults the
locale.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .report import repr_17


class SampleFormatError(DomainError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_float(text: str, line: int, col: int) -> float:
    s = text.strip()
    try:
        value = float(s)
    except ValueError:
        raise SampleFormatError(f"column {col}: {text!r} is not a number", line) from None
    if not math.isfinite(value):
        raise SampleFormatError(f"column {col}: non-finite value {text!r}", line)
    return value


def _looks_numeric(row: list[str]) -> bool:
    try:
        [float(c) for c in row]
    except ValueError:
        return False
    return True


def parse_sample_csv(text: str) -> tuple[np.ndarray, list[str] | None]:
    """Return ``(data, header)``; header is None when the first row is numeric."""
    rows = []
    header = None
    width = None
    for idx, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if header is None and width is None and not _looks_numeric(row):
            header = [c.strip() for c in row]
            width = len(row)
            continue
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise SampleFormatError(f"expected {width} fields, found {len(row)}", idx)
        rows.append([_parse_float(c, idx, j + 1) for j, c in enumerate(row)])
    if not rows:
        raise SampleFormatError("no observations found")
    return np.array(rows, dtype=float), header


def read_sample_csv(path: str | Path) -> tuple[np.ndarray, list[str] | None]:
    return parse_sample_csv(Path(path).read_text())


def format_sample_csv(data: np.ndarray, header: list[str] | None = None) -> str:
    """Canonical form: optional header, 17 significant digits, ``\\n`` line ends."""
    data = np.atleast_2d(np.asarray(data, dtype=float))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header:
        writer.writerow(header)
    for row in data:
        writer.writerow([repr_17(v) for v in row])
    return buf.getvalue()
