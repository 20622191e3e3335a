"""Initial data: piecewise constants, seeded random perturbations and expressions."""
from __future__ import annotations

import numpy as np

from .basis import DGField, DGSpace
from .config import InitialCondition
from .errors import ConfigurationError
from .mesh import Mesh
from .mms import get_case

# names usable in ``initial.expression``
_EXPR_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "cosh", "sinh", "abs",
                 "where", "minimum", "maximum", "clip", "pi", "e")
}


def random_ic(mesh: Mesh, space: DGSpace, base: float, amplitude: float, seed: int) -> DGField:
    """``base + amplitude * r`` with ``r`` cellwise constant and of zero mean.

    One value per cell is drawn uniformly from ``[-1, 1]`` by
    ``numpy.random.default_rng(seed)`` (PCG64) in cell order, then the
    volume-weighted mean is subtracted so the perturbation carries no mass.
    """
    if amplitude < 0:
        raise ConfigurationError(f"amplitude must be >= 0, got {amplitude}")
    if space.mesh is not mesh:
        raise ConfigurationError("space is not built on the given mesh")
    vol = mesh.volumes
    r = np.random.default_rng(seed).uniform(-1.0, 1.0, mesh.ncells)
    r -= float(np.dot(r, vol)) / float(vol.sum())
    coeffs = np.zeros((mesh.ncells, space.m))
    # the constant basis function on K is |K|^{-1/2}
    coeffs[:, 0] = (base + amplitude * r) * np.sqrt(vol)
    return DGField(space, coeffs)


def region_function(ic: InitialCondition):
    """Pointwise piecewise-constant function; later regions win where boxes overlap."""

    def u0(*x):
        out = np.full(np.broadcast(*x).shape, ic.background, dtype=float)
        for reg in ic.regions:
            inside = np.ones(out.shape, dtype=bool)
            for xi, lo, hi in zip(x, reg.lower, reg.upper):
                inside &= (xi >= lo) & (xi <= hi)
            out[inside] = reg.value
        return out

    return u0


def expression_function(expr: str, dim: int):
    """Compile a NumPy expression in ``x`` (and ``y``) into a pointwise function."""
    try:
        code = compile(expr, "<initial.expression>", "eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"initial.expression is not a valid expression: {exc}") from exc
    coords = ("x", "y")[:dim]
    allowed = set(_EXPR_NAMES) | set(coords)
    bad = sorted(set(code.co_names) - allowed)
    if bad:
        raise ConfigurationError(f"initial.expression uses unsupported names {bad}; allowed: {sorted(allowed)}")

    def u0(*x):
        env = dict(_EXPR_NAMES)
        env.update(zip(coords, x))
        val = eval(code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast(*x).shape)

    return u0


def initial_data(ic: InitialCondition, space: DGSpace, bc: str = "periodic"):
    """Something :func:`~ieqdg.stepper.initial_state` accepts: a callable or a :class:`DGField`."""
    if ic.kind == "mms":
        case = get_case(ic.case, bc)
        return lambda *x: case.exact(*x, 0.0)
    if ic.kind == "constant":
        return float(ic.value)
    if ic.kind == "constant_regions":
        return region_function(ic)
    if ic.kind == "random_perturbation":
        return random_ic(space.mesh, space, ic.base, ic.amplitude, 0 if ic.seed is None else ic.seed)
    if ic.kind == "expression":
        return expression_function(ic.expression, space.dim)
    raise ConfigurationError(f"unknown initial condition kind {ic.kind!r}")
