import numpy as np
import pytest

from ieqdg.basis import DGSpace, l2_project
from ieqdg.config import InitialCondition, Region
from ieqdg.diagnostics import total_mass
from ieqdg.errors import ConfigurationError
from ieqdg.initial import expression_function, initial_data, random_ic, region_function
from ieqdg.mesh import uniform_mesh


def _space(cells=(6, 5), k=1):
    mesh = uniform_mesh([(0.0, 1.0), (0.0, 2.0)], cells, "neumann")
    return mesh, DGSpace(mesh, k, family="P")


def test_zero_amplitude_is_constant():
    mesh, space = _space()
    u = random_ic(mesh, space, 0.4, 0.0, 3)
    np.testing.assert_allclose(u.at_nodes(), 0.4, atol=1e-15)


def test_exact_mass_and_bounds():
    mesh, space = _space((9, 7), 2)
    u = random_ic(mesh, space, 0.63, 0.05, 11)
    assert total_mass(u) == pytest.approx(0.63 * 2.0, abs=1e-14)
    vals = u.at_nodes()
    assert np.all(vals >= 0.63 - 0.1) and np.all(vals <= 0.63 + 0.1)
    # cellwise constant
    assert np.allclose(vals, vals[:, :1])


def test_seed_determinism():
    mesh, space = _space()
    a = random_ic(mesh, space, 0.5, 0.1, 5).coeffs
    b = random_ic(mesh, space, 0.5, 0.1, 5).coeffs
    c = random_ic(mesh, space, 0.5, 0.1, 6).coeffs
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_random_ic_validation():
    mesh, space = _space()
    with pytest.raises(ConfigurationError):
        random_ic(mesh, space, 0.5, -0.1, 0)
    other, _ = _space()
    with pytest.raises(ConfigurationError):
        random_ic(other, space, 0.5, 0.1, 0)


def test_regions_later_wins():
    ic = InitialCondition("constant_regions", background=1.0,
                          regions=(Region((0.0, 0.0), (0.5, 0.5), 2.0), Region((0.25, 0.25), (1.0, 1.0), 3.0)))
    f = region_function(ic)
    x = np.array([0.1, 0.3, 0.9, 0.9])
    y = np.array([0.1, 0.3, 0.9, 1.5])
    np.testing.assert_array_equal(f(x, y), [2.0, 3.0, 3.0, 1.0])


def test_expression():
    f = expression_function("0.5 + 0.1*sin(pi*x)*cos(y)", 2)
    assert f(np.array([0.5]), np.array([0.0]))[0] == pytest.approx(0.6)
    g = expression_function("0.3", 1)
    assert g(np.zeros(4)).shape == (4,)
    with pytest.raises(ConfigurationError, match="unsupported"):
        expression_function("__import__('os')", 1)
    with pytest.raises(ConfigurationError, match="unsupported"):
        expression_function("y", 1)
    with pytest.raises(ConfigurationError, match="valid"):
        expression_function("1 +", 1)


def test_initial_data_dispatch():
    _, space = _space()
    assert initial_data(InitialCondition("constant", value=0.2), space) == 0.2
    u = l2_project(space, initial_data(InitialCondition("expression", expression="x + y"), space))
    assert total_mass(u) == pytest.approx(0.5 * 2 + 2.0, rel=1e-13)
    with pytest.raises(ConfigurationError):
        initial_data(InitialCondition("nonsense"), space)
