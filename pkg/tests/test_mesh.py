import numpy as np
import pytest

from ieqdg.errors import ConfigurationError
from ieqdg.mesh import MeshSpec, build_mesh, uniform_mesh


def test_uniform_1d_periodic_topology():
    mesh = uniform_mesh([(0.0, 1.0)], 4, "periodic")
    assert mesh.ncells == 4 and mesh.dim == 1 and mesh.tau == 1
    (faces,) = mesh.interior
    # periodic: every cell has a right neighbor, the last wraps to the first
    assert faces.left.tolist() == [0, 1, 2, 3]
    assert faces.right.tolist() == [1, 2, 3, 0]
    np.testing.assert_allclose(faces.h_e, 0.25)
    assert mesh.boundary == ()
    assert mesh.measure == pytest.approx(1.0)


def test_uniform_2d_neumann_topology():
    mesh = uniform_mesh([(-1.0, 1.0), (0.0, 3.0)], (2, 3), "neumann")
    assert mesh.ncells == 6 and mesh.tau == 0
    fx, fy = mesh.interior
    assert fx.left.size == 1 * 3 and fy.left.size == 2 * 2
    bx, by = mesh.boundary
    assert bx.cell.size == 2 * 3 and by.cell.size == 2 * 2
    np.testing.assert_allclose(mesh.volumes, 1.0)
    assert mesh.measure == pytest.approx(6.0)


def test_volumes_sum_to_domain_measure_nonuniform():
    bp = (np.array([0.0, 0.1, 0.5, 2.0]),)
    mesh = build_mesh(MeshSpec(((0.0, 2.0),), (3,), "neumann", breakpoints=bp))
    assert mesh.volumes.sum() == pytest.approx(2.0)
    (faces,) = mesh.interior
    # h_e is the mean of the two adjacent widths
    np.testing.assert_allclose(faces.h_e, [0.5 * (0.1 + 0.4), 0.5 * (0.4 + 1.5)])
    assert not mesh.is_uniform


def test_locate_and_cell_of():
    mesh = uniform_mesh([(0.0, 1.0), (0.0, 1.0)], 4)
    c = mesh.locate((0.3, 0.8))
    assert tuple(mesh.cell_index[c]) == (1, 3)
    assert mesh.cell_of((1, 3)) == c


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(intervals=((1.0, 0.0),), cells=(4,)),
        dict(intervals=((0.0, 1.0),), cells=(0,)),
        dict(intervals=((0.0, 1.0),), cells=(1,), bc="periodic"),
        dict(intervals=((0.0, 1.0),), cells=(4,), bc="dirichlet"),
        dict(intervals=((0.0, 1.0),) * 3, cells=(2, 2, 2)),
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(ConfigurationError):
        build_mesh(MeshSpec(**kwargs))


def test_single_cell_neumann_allowed():
    mesh = uniform_mesh([(0.0, 1.0)], 1, "neumann")
    assert mesh.ncells == 1
