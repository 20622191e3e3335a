import numpy as np
import pytest
import scipy.sparse as sp

from ieqdg.basis import DGSpace
from ieqdg.errors import SolverError
from ieqdg.forms import get_assembler
from ieqdg.linsolve import (
    CoupledSolver,
    block_pattern,
    build_block_system,
    nested_dissection_order,
    solve_coupled,
)
from ieqdg.mesh import uniform_mesh


def _asm(cells=4, k=1, dim=2):
    mesh = uniform_mesh([(0.0, 1.0)] * dim, cells, "periodic")
    return get_assembler(DGSpace(mesh, k))


def test_nested_dissection_is_permutation():
    mesh = uniform_mesh([(0.0, 1.0), (0.0, 1.0)], (7, 5), "neumann")
    order = nested_dissection_order(mesh)
    assert sorted(order.tolist()) == list(range(35))


def test_decoupled_identity_blocks(rng):
    asm = _asm()
    n = asm.n
    zeros = np.zeros(asm.nnz)
    dt = 0.25
    r1, r2 = rng.standard_normal(n), rng.standard_normal(n)
    system = build_block_system(asm, 1.0 / dt, zeros, zeros, r1, r2)
    u, w = solve_coupled(system)
    np.testing.assert_allclose(u, dt * r1, atol=1e-14)
    np.testing.assert_allclose(w, -r2, atol=1e-14)


def test_block_layout_round_trip(rng):
    asm = _asm(3, 2)
    pat = block_pattern(asm)
    top, bot = rng.standard_normal(asm.n), rng.standard_normal(asm.n)
    t2, b2 = pat.from_solver(pat.to_solver(top, bot))
    np.testing.assert_array_equal(t2, top)
    np.testing.assert_array_equal(b2, bot)
    assert block_pattern(asm) is pat


def test_coupled_solve_matches_dense(rng):
    asm = _asm(3, 1)
    n = asm.n
    a_mob = asm.bilinear_data(1.0, 1.5)
    lower = asm.bilinear_data(0.3, 1.5) + asm.mass_data(rng.uniform(0, 1, (asm.space.mesh.ncells, asm.space.nq)))
    r1, r2 = rng.standard_normal(n), rng.standard_normal(n)
    system = build_block_system(asm, 10.0, a_mob, lower, r1, r2)
    u, w = solve_coupled(system)
    AM = asm.matrix(a_mob).toarray()
    Lo = asm.matrix(lower).toarray()
    full = np.block([[10.0 * np.eye(n), AM], [Lo, -np.eye(n)]])
    ref = np.linalg.solve(full, np.concatenate([r1, r2]))
    np.testing.assert_allclose(np.concatenate([u, w]), ref, rtol=1e-10, atol=1e-12)


def test_lagged_factorization_reused_and_accurate(rng):
    asm = _asm(4, 1)
    n = asm.n
    a_mob = asm.bilinear_data(1.0, 1.5)
    solver = CoupledSolver()
    lower = asm.bilinear_data(1.0, 1.5)
    base = build_block_system(asm, 100.0, a_mob, lower, rng.standard_normal(n), rng.standard_normal(n))
    solver.solve(base)
    assert solver.factorizations == 1
    # small change of the lower block on the same pattern: refinement, no new factorization
    base.matrix.data[base.pattern.pos_bot] = lower * (1 + 1e-6)
    b = rng.standard_normal(2 * n)
    x = solver.solve_vector(base.matrix, b)
    assert solver.factorizations == 1
    assert np.linalg.norm(base.matrix @ x - b) <= 1e-10 * np.linalg.norm(b)
    # large change: refactorize
    base.matrix.data[base.pattern.pos_bot] = 50.0 * lower
    x = solver.solve_vector(base.matrix, b)
    assert np.linalg.norm(base.matrix @ x - b) <= 1e-10 * np.linalg.norm(b)


def test_zero_rhs():
    asm = _asm(2, 1)
    z = np.zeros(asm.nnz)
    system = build_block_system(asm, 1.0, z, z, np.zeros(asm.n), np.zeros(asm.n))
    u, w = solve_coupled(system)
    assert not u.any() and not w.any()


def test_singular_matrix_raises():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    with pytest.raises(SolverError):
        CoupledSolver().solve_vector(A, np.array([1.0, 0.0]))


def test_repeat_solve_bit_identical(rng):
    asm = _asm(3, 2)
    n = asm.n
    a = asm.bilinear_data(1.0, 5.0)
    r1, r2 = rng.standard_normal(n), rng.standard_normal(n)
    s1 = build_block_system(asm, 3.0, a, a, r1, r2)
    s2 = build_block_system(asm, 3.0, a, a, r1, r2)
    u1, w1 = solve_coupled(s1)
    u2, w2 = solve_coupled(s2)
    np.testing.assert_array_equal(u1, u2)
    np.testing.assert_array_equal(w1, w2)
