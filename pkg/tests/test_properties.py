import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ieqdg.basis import DGField, DGSpace, gauss_rule, l2_project
from ieqdg.diagnostics import eoc, total_mass
from ieqdg.forms import PenaltyConfig, assemble_bilinear, default_beta0
from ieqdg.mesh import uniform_mesh
from ieqdg.physics import MobilitySpec, PotentialSpec

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
SETTINGS = settings(max_examples=40, deadline=None)


def _space(dim, cells, k, bc, family="Q"):
    return DGSpace(uniform_mesh([(0.0, 1.3)] * dim, cells, bc), k, family=family)


@SETTINGS
@given(st.integers(1, 2), st.integers(2, 5), st.integers(0, 3), st.sampled_from(["Q", "P"]),
       st.integers(0, 2 ** 31 - 1))
def test_projection_idempotent_and_contractive(dim, cells, k, family, seed):
    space = _space(dim, cells, k, "periodic", family)
    rng = np.random.default_rng(seed)
    nodal = rng.standard_normal((space.mesh.ncells, space.nq))
    u = DGField(space, space.project_nodal(nodal))
    again = l2_project(space, u)
    np.testing.assert_allclose(again.coeffs, u.coeffs, atol=1e-12)
    # ||Pi f|| <= ||f|| in the discrete L2 norm of the quadrature
    assert np.sum(u.coeffs ** 2) <= np.sum(space.weights * nodal ** 2) * (1 + 1e-12)


@SETTINGS
@given(st.integers(1, 12), st.integers(0, 23))
def test_gauss_exactness(q, p):
    x, w = gauss_rule(q)
    if p <= 2 * q - 1:
        exact = 0.0 if p % 2 else 2.0 / (p + 1)
        assert abs(np.dot(w, x ** p) - exact) <= 1e-13


@SETTINGS
@given(st.sampled_from(["double_well", "flory_huggins", "regularized_flory_huggins"]),
       arrays(float, 8, elements=st.floats(0.01, 0.99)), st.floats(1.0, 50.0))
def test_h_identity(kind, u, B):
    pot = PotentialSpec(kind, 3.0, 5.0, sigma=1e-3, B=B)
    rad = pot.F(u) + B
    if np.all(rad > 0):
        np.testing.assert_allclose(pot.H(u) ** 2 * rad, pot.dF(u) ** 2, rtol=1e-10, atol=1e-12)


@SETTINGS
@given(arrays(float, 16, elements=finite), st.floats(1e-6, 0.49))
def test_clamped_mobility_bounds(u, sigma):
    mob = MobilitySpec("clamped_degenerate", sigma=sigma)
    m = mob.M(u)
    assert np.all(m >= mob.m_min) and np.all(m <= 0.25)


@SETTINGS
@given(st.integers(1, 2), st.integers(2, 4), st.integers(1, 3), st.sampled_from(["periodic", "neumann"]),
       st.floats(-5, 5), st.floats(0.1, 10.0))
def test_operator_annihilates_constants(dim, cells, k, bc, c, a):
    space = _space(dim, cells, k, bc)
    A = assemble_bilinear(space, a, PenaltyConfig(default_beta0(k, True), space.mesh.tau))
    u = l2_project(space, c)
    assert np.max(np.abs(A @ u.vector)) <= 1e-10 * (1 + abs(c)) * a * cells ** 2


@SETTINGS
@given(st.integers(1, 2), st.integers(2, 4), st.integers(1, 2), st.integers(0, 2 ** 31 - 1))
def test_operator_symmetric_psd(dim, cells, k, seed):
    space = _space(dim, cells, k, "neumann")
    A = assemble_bilinear(space, 1.0, PenaltyConfig(4.0 * default_beta0(k, True), space.mesh.tau))
    assert abs(A - A.T).max() <= 1e-12 * abs(A).max()
    v = np.random.default_rng(seed).standard_normal(space.ndofs)
    assert v @ A @ v >= -1e-10 * np.dot(v, v)


@SETTINGS
@given(st.floats(1e-8, 1.0), st.floats(1.0, 4.0), st.floats(0.5, 5.0))
def test_eoc_recovers_power_law(C, p, r):
    h = [1.0, 1.0 / r] if r != 1.0 else [1.0, 0.5]
    e = [C * hi ** p for hi in h]
    assert math.isclose(eoc(e, h)[0], p, rel_tol=1e-9)


@SETTINGS
@given(st.floats(-3, 3), st.integers(0, 3), st.sampled_from(["Q", "P"]))
def test_mass_of_constant(c, k, family):
    space = _space(2, 3, k, "neumann", family)
    assert math.isclose(total_mass(space.constant(c)), c * 1.3 ** 2, rel_tol=1e-12, abs_tol=1e-12)
