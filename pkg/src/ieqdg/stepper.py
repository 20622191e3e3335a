"""First-order and BDF2 IEQ-DG time steps.

Unknowns per step are the coefficient vectors of ``u`` and ``w``; the
auxiliary variable ``U`` lives at the volume quadrature nodes and is
projected back into the DG space after every update. Because the basis
is orthonormal every unweighted mass matrix is the identity, so both
schemes solve

    [ I/(gamma dt)      A(M)  ] [u]   [r1]
    [ A(eps^2) + W_H     -I   ] [w] = [r2]

with ``gamma = 1`` (first order) or ``2/3`` (BDF2) and ``W_H`` the mass
form weighted by ``H^2 / 2``. They differ only in where ``H`` and ``M``
are evaluated and in the history combination ``u_b``, ``U_b``:

    r1 = u_b / (gamma dt) + (s, phi)
    r2 = (H^2 u_b / 2 - H U_b, psi)
    U^{n+1} = U_b + H (u^{n+1} - u_b) / 2      (at the nodes)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp

from . import kernels
from .basis import AuxField, DGField, DGSpace, evaluate_pointwise, l2_project
from .errors import ConfigurationError, UsageError
from .forms import FormAssembler, PenaltyConfig, Weight, get_assembler
from .linsolve import (
    RESIDUAL_TOL,
    BlockPattern,
    BlockSystem,
    CoupledSolver,
    block_pattern,
    build_block_system,
    solve_coupled,
)
from .physics import MobilitySpec, PotentialSpec, init_aux

__all__ = [
    "RESIDUAL_TOL",
    "BlockSystem",
    "CahnHilliardModel",
    "CoupledSolver",
    "SchemeState",
    "SeparableSource",
    "StepInfo",
    "advance",
    "build_block_system",
    "initial_state",
    "solve_coupled",
    "step_ieq1",
    "step_ieq2",
]

log = logging.getLogger(__name__)

SCHEMES = ("ieq1", "ieq2")


class SeparableSource:
    """Source ``s(x, t) = sum_i g_i(t) f_i(x)``.

    Callable like any source; the stepper projects each ``f_i`` once and
    only re-evaluates the scalar factors ``g_i`` per step.
    """

    def __init__(self, terms):
        self.terms = tuple(terms)

    def __call__(self, *args):
        *x, t = args
        return sum(g(t) * f(*x) for g, f in self.terms)

    def projections(self, space: DGSpace) -> np.ndarray:
        return np.stack(
            [space.project_nodal(evaluate_pointwise(f, space.nodes)).reshape(-1) for _, f in self.terms]
        )


class _Workspace:
    """Matrices whose sparsity never changes; values are overwritten each step."""

    def __init__(self, model: "CahnHilliardModel"):
        asm = model.assembler
        self.pattern: BlockPattern = block_pattern(asm)
        self.block = self.pattern.new_matrix()
        self.a_eps = asm.matrix(model.a_eps_data())
        self.a_mob = asm.matrix(np.zeros(asm.nnz))
        self.solver = CoupledSolver()
        self.source_proj = None
        self.last_top = None


@dataclass(eq=False)
class CahnHilliardModel:
    """Discretization plus physics for one run.

    ``source`` is an optional manufactured source ``s(x[, y], t)``.
    """

    space: DGSpace
    potential: PotentialSpec
    mobility: MobilitySpec
    epsilon: float
    penalty: PenaltyConfig
    source: Callable | None = None
    _a_eps: np.ndarray | None = field(default=None, repr=False)
    _a_mob: np.ndarray | None = field(default=None, repr=False)
    _work: _Workspace | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")
        if self.penalty.tau != self.space.mesh.tau:
            raise ConfigurationError("penalty tau does not match the mesh boundary conditions")

    @property
    def assembler(self) -> FormAssembler:
        return get_assembler(self.space)

    @property
    def workspace(self) -> _Workspace:
        if self._work is None:
            self._work = _Workspace(self)
        return self._work

    def a_eps_data(self) -> np.ndarray:
        if self._a_eps is None:
            self._a_eps = self.assembler.bilinear_data(self.epsilon ** 2, self.penalty.beta0)
        return self._a_eps

    def a_eps(self) -> sp.csr_matrix:
        return self.workspace.a_eps

    def mobility_data(self, u: DGField) -> np.ndarray:
        if self.mobility.is_constant:
            if self._a_mob is None:
                self._a_mob = self.assembler.bilinear_data(self.mobility.value, self.penalty.beta0)
            return self._a_mob
        return self.assembler.bilinear_data(Weight.from_field(u, self.mobility.M), self.penalty.beta0)

    def source_load(self, t: float) -> np.ndarray | None:
        """``(s(., t), phi_j)`` for all basis functions, or ``None`` without a source."""
        if self.source is None:
            return None
        if isinstance(self.source, SeparableSource):
            work = self.workspace
            if work.source_proj is None:
                work.source_proj = self.source.projections(self.space)
            return np.array([g(t) for g, _ in self.source.terms]) @ work.source_proj
        vals = evaluate_pointwise(lambda *x: self.source(*x, t), self.space.nodes)
        return self.space.project_nodal(vals).reshape(-1)


@dataclass(eq=False)
class SchemeState:
    """Time level ``n`` of a run.

    ``aux`` holds ``U^n`` at the quadrature nodes before projection and
    ``aux_h`` its projection ``U_h^n``. The ``*_prev`` slots hold level
    ``n - 1`` and are filled after the first step.
    """

    t: float
    n: int
    dt: float
    u: DGField
    aux: AuxField
    aux_h: DGField
    u_prev: DGField | None = None
    aux_h_prev: DGField | None = None
    w: DGField | None = None
    # cached evaluations reused by the next step
    _aux_h_nodes: np.ndarray | None = field(default=None, repr=False)
    _aux_h_prev_nodes: np.ndarray | None = field(default=None, repr=False)
    _a_u: np.ndarray | None = field(default=None, repr=False)
    _a_u_prev: np.ndarray | None = field(default=None, repr=False)

    def aux_h_nodes(self) -> np.ndarray:
        if self._aux_h_nodes is None:
            self._aux_h_nodes = self.aux_h.at_nodes()
        return self._aux_h_nodes

    def aux_h_prev_nodes(self) -> np.ndarray:
        if self._aux_h_prev_nodes is None:
            self._aux_h_prev_nodes = self.aux_h_prev.at_nodes()
        return self._aux_h_prev_nodes


@dataclass
class StepInfo:
    """Terms of the discrete energy balance of one step.

    ``energy_new`` uses the unprojected auxiliary variable. For the first
    order scheme ``energy_old`` is ``E(u^n, U_h^n)``; for BDF2 both are the
    averaged (modified) energies. ``identity_residual`` vanishes up to
    round-off and solver tolerance.
    """

    energy_old: float
    energy_new: float
    dissipation: float
    numerical_dissipation: float
    aux_dissipation: float
    source_work: float
    solver_residual: float

    @property
    def identity_residual(self) -> float:
        return (
            self.energy_new
            - self.energy_old
            + self.dissipation
            + self.numerical_dissipation
            + self.aux_dissipation
            - self.source_work
        )


def initial_state(model: CahnHilliardModel, u0, dt: float, t0: float = 0.0) -> SchemeState:
    """``u_h^0 = Pi u0`` and ``U^0 = sqrt(F(u0) + B)`` at the nodes, then ``U_h^0 = Pi U^0``."""
    if not dt > 0:
        raise ConfigurationError(f"time step must be positive, got {dt}")
    space = model.space
    u_h = l2_project(space, u0)
    aux = init_aux(model.potential, u0, space)
    return SchemeState(t=t0, n=0, dt=dt, u=u_h, aux=aux, aux_h=l2_project(space, aux))


def _nodal_sq(space: DGSpace, nodes: np.ndarray) -> float:
    return float(np.einsum("cq,cq,cq->", space.weights, nodes, nodes))


@dataclass
class _Solved:
    u: np.ndarray
    w: np.ndarray
    U_nodes: np.ndarray
    Uh: np.ndarray
    Uh_nodes: np.ndarray
    load: np.ndarray | None
    residual: float


def _coupled_step(model: CahnHilliardModel, t_new: float, scale: float, u_coef: DGField,
                  u_base: np.ndarray, U_base: np.ndarray, solver: CoupledSolver | None) -> _Solved:
    space = model.space
    asm = model.assembler
    work = model.workspace
    shape = u_coef.coeffs.shape
    H, half_h2, ub_nodes, rhs2 = kernels.nodal_rhs(space, model.potential, u_coef.coeffs,
                                                   u_base.reshape(shape), U_base)
    a_mob = model.mobility_data(u_coef)
    lower = kernels.mass_plus(model.a_eps_data(), half_h2, asm.mass_table, asm.pos_vol, asm.nnz)
    rhs1 = scale * u_base
    load = model.source_load(t_new)
    if load is not None:
        rhs1 += load

    pat = work.pattern
    mat = work.block
    top_key = (scale, "constant") if model.mobility.is_constant else None
    if top_key is None or work.last_top != top_key:
        # A_M and the mass scale change only with variable mobility or a new scheme
        mat.data[pat.pos_diag_top] = scale
        mat.data[pat.pos_top] = a_mob
        mat.data[pat.pos_diag_bot] = -1.0
        work.a_mob.data[:] = a_mob
        work.last_top = top_key
    mat.data[pat.pos_bot] = lower
    system = BlockSystem(mat, pat.to_solver(rhs1, rhs2.reshape(-1)), pat)
    u_vec, w_vec, res = (solver or work.solver).solve(system)
    U_nodes, Uh, Uh_nodes = kernels.aux_update(space, U_base, H, u_vec.reshape(shape), ub_nodes)
    return _Solved(u_vec, w_vec, U_nodes, Uh, Uh_nodes, load, res)


def _a_u(state: SchemeState, A: sp.csr_matrix) -> np.ndarray:
    if state._a_u is None:
        state._a_u = A @ state.u.vector
    return state._a_u


def _a_u_prev(state: SchemeState, A: sp.csr_matrix) -> np.ndarray:
    if state._a_u_prev is None:
        state._a_u_prev = A @ state.u_prev.vector
    return state._a_u_prev


def _new_state(state: SchemeState, space: DGSpace, sol: _Solved, a_u: np.ndarray) -> SchemeState:
    shape = state.u.coeffs.shape
    return SchemeState(
        t=state.t + state.dt,
        n=state.n + 1,
        dt=state.dt,
        u=DGField(space, sol.u.reshape(shape)),
        aux=AuxField(space, sol.U_nodes),
        aux_h=DGField(space, sol.Uh),
        u_prev=state.u,
        aux_h_prev=state.aux_h,
        w=DGField(space, sol.w.reshape(shape)),
        _aux_h_nodes=sol.Uh_nodes,
        _aux_h_prev_nodes=state.aux_h_nodes(),
        _a_u=a_u,
        _a_u_prev=state._a_u,
    )


def step_ieq1(state: SchemeState, model: CahnHilliardModel, solver: CoupledSolver | None = None,
              with_info: bool = True):
    """One first-order IEQ-DG step.

    Returns ``(new_state, info)``; ``info`` is a :class:`StepInfo`, or
    ``None`` when ``with_info`` is false (saves the energy bookkeeping).
    """
    space = model.space
    dt = state.dt
    un = state.u.vector
    Uh_nodes = state.aux_h_nodes()
    sol = _coupled_step(model, state.t + dt, 1.0 / dt, state.u, un, Uh_nodes, solver)
    if not with_info:
        return _new_state(state, space, sol, None), None

    work = model.workspace
    A = work.a_eps
    Aun = _a_u(state, A)
    Au1 = A @ sol.u
    du = sol.u - un
    info = StepInfo(
        energy_old=0.5 * float(un @ Aun) + _nodal_sq(space, Uh_nodes),
        energy_new=0.5 * float(sol.u @ Au1) + _nodal_sq(space, sol.U_nodes),
        dissipation=dt * float(sol.w @ (work.a_mob @ sol.w)),
        numerical_dissipation=0.5 * float(du @ (Au1 - Aun)),
        aux_dissipation=_nodal_sq(space, sol.U_nodes - Uh_nodes),
        source_work=0.0 if sol.load is None else dt * float(sol.load @ sol.w),
        solver_residual=sol.residual,
    )
    return _new_state(state, space, sol, Au1), info


def step_ieq2(state: SchemeState, model: CahnHilliardModel, solver: CoupledSolver | None = None,
              with_info: bool = True):
    """One BDF2 IEQ-DG step with extrapolated coefficients.

    Needs ``u^{n-1}`` and ``U_h^{n-1}``; otherwise as :func:`step_ieq1`.
    """
    if state.u_prev is None or state.aux_h_prev is None:
        raise UsageError("BDF2 step needs history; take the first step with step_ieq1")
    space = model.space
    dt = state.dt
    un = state.u.vector
    um = state.u_prev.vector
    u_star = DGField(space, 2.0 * state.u.coeffs - state.u_prev.coeffs)
    Uh_n = state.aux_h_nodes()
    Uh_m = state.aux_h_prev_nodes()
    Uh_star = 2.0 * Uh_n - Uh_m
    sol = _coupled_step(
        model, state.t + dt, 1.5 / dt, u_star, (4.0 * un - um) / 3.0, (4.0 * Uh_n - Uh_m) / 3.0, solver
    )
    if not with_info:
        return _new_state(state, space, sol, None), None

    # modified-energy balance: E~^{n+1} = Ebar^n - dt A_M(w,w) - A(du,du)/4 - |U - U_h^*|^2/2
    work = model.workspace
    A = work.a_eps
    Aun = _a_u(state, A)
    Aus = 2.0 * Aun - _a_u_prev(state, A)
    Au1 = A @ sol.u
    us = u_star.vector
    u1s = 2.0 * sol.u - un
    du = sol.u - us
    e_old = 0.5 * (
        0.5 * float(un @ Aun) + _nodal_sq(space, Uh_n) + 0.5 * float(us @ Aus) + _nodal_sq(space, Uh_star)
    )
    e_new = 0.5 * (
        0.5 * float(sol.u @ Au1)
        + _nodal_sq(space, sol.U_nodes)
        + 0.5 * float(u1s @ (2.0 * Au1 - Aun))
        + _nodal_sq(space, 2.0 * sol.U_nodes - Uh_n)
    )
    info = StepInfo(
        energy_old=e_old,
        energy_new=e_new,
        dissipation=dt * float(sol.w @ (work.a_mob @ sol.w)),
        numerical_dissipation=0.25 * float(du @ (Au1 - Aus)),
        aux_dissipation=0.5 * _nodal_sq(space, sol.U_nodes - Uh_star),
        source_work=0.0 if sol.load is None else dt * float(sol.load @ sol.w),
        solver_residual=sol.residual,
    )
    return _new_state(state, space, sol, Au1), info


def advance(state: SchemeState, model: CahnHilliardModel, scheme: str, solver: CoupledSolver | None = None,
            with_info: bool = True):
    """One step of ``scheme`` (``"ieq1"`` or ``"ieq2"``); BDF2 starts with a first-order step."""
    if scheme not in SCHEMES:
        raise ConfigurationError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if scheme == "ieq1" or state.u_prev is None:
        return step_ieq1(state, model, solver, with_info)
    return step_ieq2(state, model, solver, with_info)
