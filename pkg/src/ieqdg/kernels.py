"""Selects the compiled kernel module, falling back to NumPy.

Set ``IEQDG_PURE_PYTHON=1`` before import to force the fallback. The
functions below take package objects and unpack them for the backend.
"""
import os

import numpy as np

from . import _kernels_py
from .errors import ConfigurationError

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("IEQDG_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py


def scatter_add(pos, vals, n):
    return _impl.scatter_add(pos, np.ascontiguousarray(vals, dtype=float), n)


def nodal_rhs(space, potential, u_coef, u_base, U_base):
    """``(H, H^2/2, u_base at nodes, rhs2 coefficients)``; see ``_kernels_py.nodal_rhs``."""
    phi, scale, proj, fac = space.kernel_tables
    kind, params = potential.kernel_args()
    H, half_h2, ub, rhs2, status = _impl.nodal_rhs(
        phi, scale, proj, fac, np.ascontiguousarray(u_coef), np.ascontiguousarray(u_base),
        np.ascontiguousarray(U_base), kind, params,
    )
    if status:
        # re-evaluate with the reference implementation for a precise message
        potential.H(space.values_at_nodes(u_coef))
        raise ConfigurationError("potential kernel failed on the current state")
    return H, half_h2, ub, rhs2


def aux_update(space, U_base, H, u_new, ub_nodes):
    """``(U nodes, U_h coefficients, U_h nodes)``; see ``_kernels_py.aux_update``."""
    phi, scale, proj, fac = space.kernel_tables
    return _impl.aux_update(
        phi, scale, proj, fac, np.ascontiguousarray(U_base), H, np.ascontiguousarray(u_new), ub_nodes
    )


def mass_plus(base, weight, mass_table, pos, nnz):
    return _impl.mass_plus(base, np.ascontiguousarray(weight, dtype=float), mass_table, pos, nnz)
