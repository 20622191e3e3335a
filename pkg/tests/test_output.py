import csv
import math

import numpy as np
import pytest

from ieqdg.basis import DGSpace, l2_project
from ieqdg.diagnostics import CSV_FIELDS, DiagnosticsRecord
from ieqdg.mesh import uniform_mesh
from ieqdg.output import (
    CsvWriter,
    OutputError,
    fmt,
    read_diagnostics,
    snapshot_header,
    write_diagnostics,
    write_snapshot,
)


def test_header_only(tmp_path):
    p = write_diagnostics(tmp_path / "d.csv", [])
    assert p.read_text() == ",".join(CSV_FIELDS) + "\n"
    assert read_diagnostics(p) == []


def test_header_text_exact():
    assert ",".join(CSV_FIELDS) == (
        "step,t,mass,energy_original,energy_quadratized,energy_modified,identity_residual,dgnorm_w"
    )


def test_round_trip(tmp_path):
    rec = DiagnosticsRecord(3, 0.1 + 0.2, 1 / 3, -2.0 / 7, math.pi * 1e-300, math.nan, 1e-17, 123456.789)
    (back,) = read_diagnostics(write_diagnostics(tmp_path / "d.csv", [rec]))
    for a, b in zip(rec.as_row(), back.as_row()):
        assert a == b or (math.isnan(a) and math.isnan(b))


def test_fmt():
    assert fmt(5) == "5" and fmt(np.int64(7)) == "7"
    assert float(fmt(0.1)) == 0.1 and fmt(0.5) == "0.5"


def test_snapshot_constant_2d(tmp_path):
    mesh = uniform_mesh([(0.0, 1.0), (0.0, 1.0)], (3, 2), "neumann")
    u = l2_project(DGSpace(mesh, 2, family="P"), 0.37)
    for grid in (0, 3):
        p = write_snapshot(tmp_path / f"u_{grid}.csv", u, grid)
        with p.open() as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == snapshot_header(2)
        assert len(rows) - 1 == 6 * max(grid, 1) ** 2
        np.testing.assert_allclose([float(r[-1]) for r in rows[1:]], 0.37, rtol=1e-14)


def test_snapshot_1d_centers(tmp_path):
    mesh = uniform_mesh([(0.0, 2.0)], 4, "periodic")
    u = l2_project(DGSpace(mesh, 1), lambda x: x)
    with write_snapshot(tmp_path / "u.csv", u).open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["cell_i", "x", "value"]
    xs = [float(r[1]) for r in rows[1:]]
    np.testing.assert_allclose(xs, [0.25, 0.75, 1.25, 1.75])
    np.testing.assert_allclose([float(r[2]) for r in rows[1:]], xs, atol=1e-14)


def test_io_failure_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OutputError, match="file"):
        CsvWriter(blocker / "sub" / "d.csv", ("a",))
