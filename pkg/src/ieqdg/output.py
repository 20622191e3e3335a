"""CSV writers for diagnostics, errors and field snapshots.

Floats are written with 17 significant digits so every value round-trips
exactly through ``float()``.
"""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .basis import DGField
from .diagnostics import CSV_FIELDS, DiagnosticsRecord
from .errors import IEQDGError

ERROR_FIELDS = ("step", "t", "l2", "linf")


class OutputError(IEQDGError, OSError):
    """An output file could not be written."""


def fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


class CsvWriter:
    """Line-buffered CSV file with a fixed header; usable as a context manager."""

    def __init__(self, path, header: Sequence[str]):
        self.path = Path(path)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", newline="")
        except OSError as exc:
            raise OutputError(f"cannot write {self.path}: {exc}") from exc
        self._csv = csv.writer(self._fh, lineterminator="\n")
        self._csv.writerow(header)
        self._fh.flush()

    def write(self, row: Iterable):
        try:
            self._csv.writerow([fmt(v) for v in row])
            self._fh.flush()
        except OSError as exc:
            raise OutputError(f"cannot write {self.path}: {exc}") from exc

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def diagnostics_writer(directory) -> CsvWriter:
    return CsvWriter(Path(directory) / "diagnostics.csv", CSV_FIELDS)


def write_diagnostics(path, records: Iterable[DiagnosticsRecord]) -> Path:
    """Write ``records`` (possibly none) to ``path`` with the standard header."""
    with CsvWriter(path, CSV_FIELDS) as w:
        for rec in records:
            w.write(rec.as_row())
    return Path(path)


def read_diagnostics(path) -> list[DiagnosticsRecord]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected header {header}")
        return [DiagnosticsRecord(int(r[0]), *map(float, r[1:])) for r in reader]


def snapshot_rows(u: DGField, grid: int = 0):
    """Rows ``cell_i[, cell_j], x[, y], value`` at cell centers, or on a ``grid``-point midpoint lattice per cell."""
    space = u.space
    mesh = space.mesh
    d = space.dim
    if grid > 0:
        pts1 = -1.0 + (2.0 * np.arange(grid) + 1.0) / grid
        xi = np.stack(np.meshgrid(*([pts1] * d), indexing="ij"), axis=-1).reshape(-1, d)
    else:
        xi = np.zeros((1, d))
    values = space.evaluate_at_reference(u.coeffs, xi)
    points = space.physical_points(xi)
    for c in range(mesh.ncells):
        idx = tuple(int(i) for i in mesh.cell_index[c])
        for p in range(xi.shape[0]):
            yield (*idx, *points[c, p], values[c, p])


def snapshot_header(dim: int) -> tuple[str, ...]:
    return ("cell_i", "x", "value") if dim == 1 else ("cell_i", "cell_j", "x", "y", "value")


def write_snapshot(path, u: DGField, grid: int = 0) -> Path:
    with CsvWriter(path, snapshot_header(u.space.dim)) as w:
        for row in snapshot_rows(u, grid):
            w.write(row)
    return Path(path)
