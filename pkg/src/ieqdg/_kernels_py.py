"""Pure NumPy implementations of the hot kernels.

These mirror ``_kernels.pyx`` and are used when the compiled extension is
unavailable or ``IEQDG_PURE_PYTHON=1`` is set. Shapes: ``C`` cells, ``Q``
volume nodes per cell, ``m`` basis functions per cell.
"""
from functools import lru_cache

import numpy as np

POTENTIAL_KINDS = ("double_well", "flory_huggins", "regularized_flory_huggins")


def scatter_add(pos, vals, n):
    """``out[pos[i]] += vals[i]``."""
    return np.bincount(pos, weights=vals, minlength=n)


@lru_cache(maxsize=32)
def _potential(kind, theta, theta_c, sigma, B):
    from .physics import PotentialSpec

    return PotentialSpec(POTENTIAL_KINDS[kind], theta, theta_c, sigma, B)


def nodal_rhs(eval_tab, scale, proj_tab, fac, u_coef, u_base, U_base, kind, params):
    """Nodal part of one IEQ step.

    Returns ``(H, half_h2, ub_nodes, rhs2, status)`` where ``H = H(u_coef)``
    at the nodes, ``half_h2 = H^2/2``, ``ub_nodes`` are the nodal values of
    ``u_base`` and ``rhs2 = Pi(H (H ub / 2 - U_base))`` in coefficients.
    ``status`` is 0; domain problems raise from :class:`PotentialSpec`.
    """
    table = eval_tab.T
    col = scale[:, None]
    H = _potential(kind, *map(float, params)).H((u_coef @ table) * col)
    ub = (u_base @ table) * col
    half_h2 = 0.5 * H * H
    rhs2 = ((half_h2 * ub - H * U_base) @ proj_tab) * fac[:, None]
    return H, half_h2, ub, rhs2, 0


def aux_update(eval_tab, scale, proj_tab, fac, U_base, H, u_new, ub_nodes):
    """``U = U_base + H (u_new - ub) / 2`` at the nodes, then ``U_h = Pi U``.

    Returns ``(U_nodes, Uh_coeffs, Uh_nodes)``.
    """
    table = eval_tab.T
    col = scale[:, None]
    U = U_base + 0.5 * H * ((u_new @ table) * col - ub_nodes)
    Uh = (U @ proj_tab) * fac[:, None]
    return U, Uh, (Uh @ table) * col


def mass_plus(base, weight, mass_table, pos, nnz):
    """``base + scatter(weight @ mass_table)``: adds a nodal-weighted mass form to CSR data."""
    blocks = weight @ mass_table
    return base + np.bincount(pos, weights=blocks.ravel(), minlength=nnz)
