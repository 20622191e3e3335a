"""Mass, energies, error norms and convergence orders."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from typing import Callable, Sequence

import numpy as np

from .basis import AuxField, DGField, evaluate_pointwise
from .forms import dg_norm
from .stepper import CahnHilliardModel, SchemeState, StepInfo

CSV_FIELDS = (
    "step",
    "t",
    "mass",
    "energy_original",
    "energy_quadratized",
    "energy_modified",
    "identity_residual",
    "dgnorm_w",
)


def total_mass(u: DGField) -> float:
    """``int u`` by volume quadrature (exact for the polynomial field)."""
    space = u.space
    return float(np.sum(space.weights * u.at_nodes()))


def _half_a_eps(model: CahnHilliardModel, u: np.ndarray) -> float:
    return 0.5 * float(u @ (model.a_eps() @ u))


def original_energy(u: DGField, model: CahnHilliardModel) -> float:
    """``A(eps^2; u, u)/2 + int F(u)``; raises for ``u`` outside the domain of ``F``."""
    space = u.space
    return _half_a_eps(model, u.vector) + float(np.sum(space.weights * model.potential.F(u.at_nodes())))


def _aux_sq(U) -> float:
    if isinstance(U, AuxField):
        return U.norm_squared()
    if isinstance(U, DGField):
        # orthonormal basis: the L2 norm is the coefficient norm
        return float(np.sum(U.coeffs ** 2))
    raise TypeError(f"expected DGField or AuxField, got {type(U).__name__}")


def quadratized_energy(u: DGField, U, model: CahnHilliardModel) -> float:
    """``A(eps^2; u, u)/2 + ||U||^2`` for a projected (``DGField``) or nodal (``AuxField``) ``U``."""
    return _half_a_eps(model, u.vector) + _aux_sq(U)


def modified_energy(state: SchemeState, model: CahnHilliardModel) -> float:
    """Average of the quadratic energy at level ``n`` and at the extrapolated level.

    Without history the extrapolant equals the current state and the value
    reduces to the quadratic energy.
    """
    e_n = quadratized_energy(state.u, state.aux_h, model)
    if state.u_prev is None:
        return e_n
    u_star = state.u * 2.0 - state.u_prev
    U_star = state.aux_h * 2.0 - state.aux_h_prev
    return 0.5 * (e_n + quadratized_energy(u_star, U_star, model))


@dataclass
class DiagnosticsRecord:
    """One row of ``diagnostics.csv``.

    ``energy_modified`` is NaN for first-order runs; ``identity_residual``
    and ``dgnorm_w`` are NaN before the first step.
    """

    step: int
    t: float
    mass: float
    energy_original: float
    energy_quadratized: float
    energy_modified: float
    identity_residual: float
    dgnorm_w: float

    def as_row(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))


def energies(state: SchemeState, model: CahnHilliardModel, scheme: str = "ieq1",
             info: StepInfo | None = None) -> DiagnosticsRecord:
    """Diagnostics of ``state``; ``info`` is the :class:`StepInfo` of the step that produced it."""
    e_mod = modified_energy(state, model) if scheme == "ieq2" else math.nan
    dgw = math.nan if state.w is None else math.sqrt(max(dg_norm(state.w, model.penalty), 0.0))
    return DiagnosticsRecord(
        step=state.n,
        t=state.t,
        mass=total_mass(state.u),
        energy_original=original_energy(state.u, model),
        energy_quadratized=quadratized_energy(state.u, state.aux_h, model),
        energy_modified=e_mod,
        identity_residual=math.nan if info is None else info.identity_residual,
        dgnorm_w=dgw,
    )


def error_norms(u: DGField, exact: Callable, t: float, samples: int = 10) -> tuple[float, float]:
    """``(L2, Linf)`` errors against ``exact(*x, t)``.

    L2 uses the volume quadrature; Linf takes the maximum over ``samples``
    midpoints plus both end points per axis in every cell.
    """
    space = u.space
    diff = u.at_nodes() - evaluate_pointwise(lambda *x: exact(*x, t), space.nodes)
    l2 = math.sqrt(float(np.sum(space.weights * diff ** 2)))
    xi = space.sample_reference_points(samples)
    vals = space.evaluate_at_reference(u.coeffs, xi)
    ref = evaluate_pointwise(lambda *x: exact(*x, t), space.physical_points(xi))
    return l2, float(np.max(np.abs(vals - ref)))


def eoc(errors: Sequence[float], sizes: Sequence[float]) -> list[float | None]:
    """Orders ``ln(e_i/e_{i+1}) / ln(h_i/h_{i+1})`` for consecutive pairs.

    Pairs involving a non-positive error give ``None`` and a warning.
    """
    if len(errors) != len(sizes):
        raise ValueError("errors and sizes must have the same length")
    if len(errors) < 2:
        raise ValueError("need at least two entries")
    out: list[float | None] = []
    for (e0, e1), (h0, h1) in zip(zip(errors, errors[1:]), zip(sizes, sizes[1:])):
        if not (e0 > 0 and e1 > 0):
            warnings.warn(f"order undefined for errors ({e0}, {e1})", RuntimeWarning, stacklevel=2)
            out.append(None)
            continue
        out.append(math.log(e0 / e1) / math.log(h0 / h1))
    return out
