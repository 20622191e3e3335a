import numpy as np
import pytest
from numpy.polynomial import legendre as L

from ieqdg.basis import (
    AuxField,
    DGField,
    DGSpace,
    basis_eval,
    face_average,
    face_jump,
    field_eval,
    gauss_rule,
    l2_project,
)
from ieqdg.errors import ConfigurationError, DomainError
from ieqdg.mesh import uniform_mesh


def test_gauss_rule_two_and_three_points():
    x, w = gauss_rule(2)
    np.testing.assert_allclose(np.sort(x), [-1 / np.sqrt(3), 1 / np.sqrt(3)], atol=1e-15)
    np.testing.assert_allclose(w, [1.0, 1.0], atol=1e-15)
    x, w = gauss_rule(3)
    order = np.argsort(x)
    np.testing.assert_allclose(x[order], [-np.sqrt(0.6), 0.0, np.sqrt(0.6)], atol=1e-15)
    np.testing.assert_allclose(w[order], [5 / 9, 8 / 9, 5 / 9], atol=1e-15)
    x, w = gauss_rule(2)
    assert np.sum(w * x ** 2) == pytest.approx(2 / 3, abs=1e-15)


@pytest.mark.parametrize("q", [0, 21, 2.5])
def test_gauss_rule_range(q):
    with pytest.raises(ConfigurationError):
        gauss_rule(q)


@pytest.mark.parametrize("q", [1, 3, 6, 10])
def test_gauss_rule_exactness(q):
    x, w = gauss_rule(q)
    for p in range(2 * q):
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert np.sum(w * x ** p) == pytest.approx(exact, abs=1e-13)


def _fine_gram(space, cell, npts=12):
    # independent oracle: 12-point tensor Gauss rule and pointwise basis_eval
    mesh = space.mesh
    x, w = L.leggauss(npts)
    lo, wid = mesh.lower[cell], mesh.widths[cell]
    pts1 = [lo[a] + 0.5 * (x + 1) * wid[a] for a in range(space.dim)]
    grids = np.meshgrid(*pts1, indexing="ij")
    wts = np.ones_like(grids[0])
    for a, g in enumerate(np.meshgrid(*([w] * space.dim), indexing="ij")):
        wts = wts * g * 0.5 * wid[a]
    G = np.zeros((space.m, space.m))
    for idx in np.ndindex(grids[0].shape):
        p = [g[idx] for g in grids]
        v, _ = basis_eval(space, cell, p)
        G += wts[idx] * np.outer(v, v)
    return G


@pytest.mark.parametrize("family", ["Q", "P"])
@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_orthonormal_2d(k, family):
    mesh = uniform_mesh([(0.0, 2.0), (-1.0, 0.5)], (3, 2), "neumann")
    space = DGSpace(mesh, k, family=family)
    expected_m = (k + 1) ** 2 if family == "Q" else (k + 1) * (k + 2) // 2
    assert space.m == expected_m
    for cell in (0, 4):
        np.testing.assert_allclose(_fine_gram(space, cell), np.eye(space.m), atol=1e-12)


def test_gram_via_own_quadrature_is_identity():
    space = DGSpace(uniform_mesh([(0.0, 1.0)], 5), 3)
    tab = space.vol_values * space.cell_scale[0]
    G = (tab.T * (space.weights[0])) @ tab
    np.testing.assert_allclose(G, np.eye(4), atol=1e-12)


def test_basis_eval_examples():
    mesh = uniform_mesh([(0.0, 2.0)], 2)
    s0 = DGSpace(mesh, 0)
    v, g = basis_eval(s0, 1, [1.7])
    np.testing.assert_allclose(v, [1.0 / np.sqrt(1.0)])
    np.testing.assert_allclose(g, 0.0)
    s2 = DGSpace(uniform_mesh([(0.0, 4.0), (0.0, 4.0)], 2), 2)
    v, _ = basis_eval(s2, 0, [1.0, 1.0])
    # modes (0, 1) and (1, 0) are odd about the centroid
    for j, mode in enumerate(s2.modes):
        if tuple(mode) in ((0, 1), (1, 0)):
            assert abs(v[j]) < 1e-15


def test_basis_eval_gradient_matches_finite_difference():
    space = DGSpace(uniform_mesh([(0.0, 1.0), (0.0, 2.0)], (2, 3)), 3)
    p = np.array([0.31, 1.1])
    cell = space.mesh.locate(p)
    _, g = basis_eval(space, cell, p)
    h = 1e-6
    for a in range(2):
        e = np.zeros(2)
        e[a] = h
        fd = (basis_eval(space, cell, p + e)[0] - basis_eval(space, cell, p - e)[0]) / (2 * h)
        np.testing.assert_allclose(g[:, a], fd, rtol=1e-6, atol=1e-6)


def test_basis_eval_outside_cell_raises():
    space = DGSpace(uniform_mesh([(0.0, 1.0)], 2), 1)
    with pytest.raises(DomainError):
        basis_eval(space, 0, [0.9])


def test_projection_reproduces_constants_and_polynomials(rng):
    space = DGSpace(uniform_mesh([(0.0, 1.0), (0.0, 1.0)], 3), 2)
    u = l2_project(space, 5.0)
    np.testing.assert_allclose(u.at_nodes(), 5.0, atol=1e-13)
    c = rng.standard_normal((space.mesh.ncells, space.m))
    f = DGField(space, c)
    again = l2_project(space, AuxField(space, f.at_nodes()))
    np.testing.assert_allclose(again.coeffs, c, atol=1e-12)
    same = l2_project(space, f)
    assert same is not f
    np.testing.assert_array_equal(same.coeffs, c)


def test_projection_of_polynomial_function_exact():
    space = DGSpace(uniform_mesh([(0.0, 1.0), (0.0, 1.0)], 2), 2, family="Q")
    u = l2_project(space, lambda x, y: 1 + x * y ** 2 - 3 * x ** 2 * y)
    v = field_eval(u, 3, [0.7, 0.6])
    assert v == pytest.approx(1 + 0.7 * 0.36 - 3 * 0.49 * 0.6, abs=1e-12)


def test_projection_is_l2_contraction():
    space = DGSpace(uniform_mesh([(0.0, 2 * np.pi)], 4), 1)
    u = l2_project(space, np.sin)
    proj_sq = float(np.sum(u.coeffs ** 2))
    assert proj_sq <= np.pi + 1e-12


def test_projection_idempotent_on_aux(rng):
    space = DGSpace(uniform_mesh([(0.0, 1.0)], 6), 2)
    aux = AuxField(space, rng.standard_normal((6, space.nq)))
    p1 = l2_project(space, aux)
    p2 = l2_project(space, AuxField(space, p1.at_nodes()))
    np.testing.assert_allclose(p1.coeffs, p2.coeffs, atol=1e-13)


def test_traces_average_and_jump_match_pointwise(rng):
    space = DGSpace(uniform_mesh([(0.0, 1.0)], 2, "periodic"), 1)
    u = DGField(space, rng.standard_normal((2, 2)))
    left = field_eval(u, 0, [0.5])
    right = field_eval(u, 1, [0.5])
    # brute force: evaluate the polynomial of each cell at the shared point
    c0, c1 = u.coeffs
    xi0, xi1 = 1.0, -1.0
    brute_l = (c0[0] + c0[1] * np.sqrt(3) * xi0) / np.sqrt(0.5)
    brute_r = (c1[0] + c1[1] * np.sqrt(3) * xi1) / np.sqrt(0.5)
    assert left == pytest.approx(brute_l, abs=1e-13)
    assert right == pytest.approx(brute_r, abs=1e-13)
    assert face_jump(left, right) == pytest.approx(brute_r - brute_l)
    assert face_jump(right, left) == pytest.approx(-face_jump(left, right))
    assert face_average(right, left) == pytest.approx(face_average(left, right))
    lo, hi = space.traces(u.coeffs, 0)
    assert lo[0, 0] == pytest.approx(left) and hi[0, 0] == pytest.approx(right)


def test_constant_field_has_no_jumps():
    space = DGSpace(uniform_mesh([(0.0, 1.0), (0.0, 1.0)], 3), 2)
    u = space.constant(2.5)
    for axis in range(2):
        lo, hi = space.traces(u.coeffs, axis)
        np.testing.assert_allclose(hi - lo, 0.0, atol=1e-13)


def test_shape_validation():
    space = DGSpace(uniform_mesh([(0.0, 1.0)], 3), 1)
    with pytest.raises(ConfigurationError):
        DGField(space, np.zeros((3, 3)))
    with pytest.raises(ConfigurationError):
        AuxField(space, np.zeros((3, 1)))
    with pytest.raises(ConfigurationError):
        DGSpace(space.mesh, 5)
    with pytest.raises(ConfigurationError):
        DGSpace(space.mesh, 2, quad_points=3)
    with pytest.raises(ConfigurationError):
        DGSpace(space.mesh, 2, family="S")
