"""Orthonormal tensor-Legendre DG space, Gauss quadrature and L2 projection.

On a cell ``K`` with widths ``h_i`` the basis functions are

    phi_j(x) = |K|^{-1/2} prod_i sqrt(2 j_i + 1) P_{j_i}(xi_i),

with ``xi_i`` the affine map of ``x_i`` onto ``[-1, 1]``. They are
orthonormal in L2(K), so every (unweighted) mass matrix is the identity.
Coefficients are stored as an array of shape ``(ncells, m)``, one column
per multi-index ``j`` in C order. The tensor family ``Q^k`` keeps every
``j`` with ``max j_i <= k`` (``m = (k + 1)**d``); the total-degree family
``P^k`` keeps ``sum j_i <= k``. Both coincide in 1D.

Pointwise callables receive one coordinate array per axis, i.e. ``f(x)`` in
1D and ``f(x, y)`` in 2D, and must broadcast.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Callable, Union

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigurationError, DomainError
from .mesh import Mesh

MAX_GAUSS_POINTS = 20
FAMILIES = ("Q", "P")


def gauss_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[-1, 1]``."""
    if int(q) != q or not 1 <= q <= MAX_GAUSS_POINTS:
        raise ConfigurationError(f"quadrature point count must be in [1, {MAX_GAUSS_POINTS}], got {q}")
    return npleg.leggauss(int(q))


def legendre_table(k: int, xi: np.ndarray, derivative: bool = False) -> np.ndarray:
    """Normalized Legendre values ``sqrt(2n+1) P_n(xi)`` (or derivatives), shape ``(len(xi), k+1)``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    out = np.empty((xi.size, k + 1))
    for n in range(k + 1):
        c = np.zeros(n + 1)
        c[n] = np.sqrt(2 * n + 1)
        if derivative:
            c = npleg.legder(c) if n > 0 else np.zeros(1)
        out[:, n] = npleg.legval(xi, c)
    return out


def _tensor_table(tables_per_axis: list[np.ndarray]) -> np.ndarray:
    """Combine per-axis tables ``(npts_i, k+1)`` into ``(prod npts_i, (k+1)**d)`` (both C order)."""
    out = tables_per_axis[0]
    for t in tables_per_axis[1:]:
        out = np.einsum("pa,qb->pqab", out, t).reshape(out.shape[0] * t.shape[0], -1)
    return out


class DGSpace:
    """Discontinuous piecewise polynomial space on a tensor-product mesh.

    Parameters
    ----------
    mesh
        The underlying :class:`~ieqdg.mesh.Mesh`.
    degree
        Polynomial degree ``k`` per axis (0 to 4).
    quad_points
        Gauss points per axis for volume and face rules; defaults to ``k + 2``.
    family
        ``"Q"`` (tensor degree ``k``, the default) or ``"P"`` (total degree ``k``).
    """

    def __init__(self, mesh: Mesh, degree: int, quad_points: int | None = None, family: str = "Q"):
        if int(degree) != degree or not 0 <= degree <= 4:
            raise ConfigurationError(f"degree must be an integer in [0, 4], got {degree}")
        family = str(family).upper()
        if family not in FAMILIES:
            raise ConfigurationError(f"family must be one of {FAMILIES}, got {family!r}")
        q = degree + 2 if quad_points is None else int(quad_points)
        if q < degree + 2:
            raise ConfigurationError(f"need at least k+2={degree + 2} quadrature points, got {q}")
        self.mesh = mesh
        self.degree = int(degree)
        self.dim = mesh.dim
        self.q = q
        self.family = family
        self.xi, self.omega = gauss_rule(q)

        k, d = self.degree, self.dim
        modes = np.array(list(product(range(k + 1), repeat=d)), dtype=int).reshape(-1, d)
        keep = np.arange(len(modes)) if family == "Q" else np.flatnonzero(modes.sum(axis=1) <= k)
        self._keep = keep
        self.modes = modes[keep]
        self.m = len(keep)
        P1 = legendre_table(k, self.xi)
        D1 = legendre_table(k, self.xi, derivative=True)
        ends = np.array([-1.0, 1.0])
        Pe = legendre_table(k, ends)
        De = legendre_table(k, ends, derivative=True)

        # volume tables
        self.vol_values = _tensor_table([P1] * d)[:, keep]
        self.vol_grads = tuple(
            _tensor_table([D1 if i == a else P1 for i in range(d)])[:, keep] for a in range(d)
        )
        self.vol_weights = np.prod(np.array(list(product(self.omega, repeat=d))), axis=1)
        self.vol_xi = np.array(list(product(self.xi, repeat=d)))
        self.nq = self.vol_weights.size

        # face tables: per axis, traces from the lower cell (xi = +1) and upper cell (xi = -1)
        self.face_weights = []
        self.face_xi_t = []
        self.trace_lo = []  # trace of the left cell, at its upper end
        self.trace_hi = []  # trace of the right cell, at its lower end
        self.ntrace_lo = []
        self.ntrace_hi = []
        for a in range(d):
            tang = [i for i in range(d) if i != a]
            if tang:
                fw = np.prod(np.array(list(product(self.omega, repeat=len(tang)))), axis=1)
                fx = np.array(list(product(self.xi, repeat=len(tang))))
            else:
                fw = np.ones(1)
                fx = np.zeros((1, 0))
            self.face_weights.append(fw)
            self.face_xi_t.append(fx)

            def face_table(end, deriv):
                tabs = []
                for i in range(d):
                    if i == a:
                        tabs.append((De if deriv else Pe)[[end]])
                    else:
                        tabs.append(P1)
                return _tensor_table(tabs)[:, keep]

            self.trace_lo.append(face_table(1, False))
            self.trace_hi.append(face_table(0, False))
            self.ntrace_lo.append(face_table(1, True))
            self.ntrace_hi.append(face_table(0, True))

        self.cell_scale = mesh.volumes ** -0.5
        self.grad_scale = 2.0 / mesh.widths

    # ------------------------------------------------------------------ geometry
    @property
    def ndofs(self) -> int:
        return self.mesh.ncells * self.m

    @cached_property
    def nodes(self) -> np.ndarray:
        """Physical volume quadrature nodes, shape ``(ncells, nq, d)``."""
        mesh = self.mesh
        return mesh.lower[:, None, :] + 0.5 * (self.vol_xi[None, :, :] + 1.0) * mesh.widths[:, None, :]

    @cached_property
    def weights(self) -> np.ndarray:
        """Physical volume quadrature weights, shape ``(ncells, nq)``."""
        return self.vol_weights[None, :] * (self.mesh.volumes / 2.0 ** self.dim)[:, None]

    def face_nodes(self, axis: int) -> np.ndarray:
        """Physical face quadrature nodes for the interior faces normal to ``axis``."""
        fs = self.mesh.interior[axis]
        cells = fs.left
        lower = self.mesh.lower[cells]
        widths = self.mesh.widths[cells]
        tang = [i for i in range(self.dim) if i != axis]
        pts = np.empty((len(fs), self.face_weights[axis].size, self.dim))
        pts[:, :, axis] = fs.position[:, None]
        for col, i in enumerate(tang):
            pts[:, :, i] = lower[:, None, i] + 0.5 * (self.face_xi_t[axis][None, :, col] + 1.0) * widths[:, None, i]
        return pts

    def face_measure_scale(self, axis: int) -> np.ndarray:
        """Jacobian ``ds / dxi_t`` for each interior face normal to ``axis``."""
        fs = self.mesh.interior[axis]
        widths = self.mesh.widths[fs.left]
        tang = [i for i in range(self.dim) if i != axis]
        if not tang:
            return np.ones(len(fs))
        return np.prod(widths[:, tang] / 2.0, axis=1)

    # ------------------------------------------------------------------ evaluation
    @cached_property
    def kernel_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(phi, scale, proj, fac)`` with nodal values ``scale[c] * coeffs[c] @ phi.T`` and
        projections ``fac[c] * nodal[c] @ proj``."""
        phi = np.ascontiguousarray(self.vol_values)
        proj = np.ascontiguousarray(self.vol_values * self.vol_weights[:, None])
        fac = self.mesh.volumes ** 0.5 / 2.0 ** self.dim
        return phi, np.ascontiguousarray(self.cell_scale, dtype=float), proj, fac

    @cached_property
    def _eval_tables(self):
        return np.ascontiguousarray(self.vol_values.T), self.cell_scale[:, None]

    @cached_property
    def _proj_tables(self):
        _, _, proj, fac = self.kernel_tables
        return proj, fac[:, None]

    def values_at_nodes(self, coeffs: np.ndarray) -> np.ndarray:
        tab, scale = self._eval_tables
        return (coeffs @ tab) * scale

    def gradients_at_nodes(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.empty((self.mesh.ncells, self.nq, self.dim))
        for a in range(self.dim):
            out[:, :, a] = (coeffs @ self.vol_grads[a].T) * (self.cell_scale * self.grad_scale[:, a])[:, None]
        return out

    def traces(self, coeffs: np.ndarray, axis: int, normal_derivative: bool = False):
        """One-sided traces on the interior faces normal to ``axis``.

        Returns ``(left, right)`` arrays of shape ``(nfaces, npts)``: the trace
        from the lower cell and from the upper cell. With ``normal_derivative``
        the derivative along ``+axis`` is returned instead of the value.
        """
        fs = self.mesh.interior[axis]
        s = self.cell_scale
        if normal_derivative:
            g = self.grad_scale[:, axis]
            lo = (coeffs[fs.left] @ self.ntrace_lo[axis].T) * (s * g)[fs.left][:, None]
            hi = (coeffs[fs.right] @ self.ntrace_hi[axis].T) * (s * g)[fs.right][:, None]
        else:
            lo = (coeffs[fs.left] @ self.trace_lo[axis].T) * s[fs.left][:, None]
            hi = (coeffs[fs.right] @ self.trace_hi[axis].T) * s[fs.right][:, None]
        return lo, hi

    def reference_tables(self, xi: np.ndarray):
        """Basis values and reference gradients at reference points ``xi`` of shape ``(npts, d)``."""
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        k, d = self.degree, self.dim
        P = [legendre_table(k, xi[:, i]) for i in range(d)]
        D = [legendre_table(k, xi[:, i], derivative=True) for i in range(d)]
        npts = xi.shape[0]

        def combine(tabs):
            out = np.ones((npts, 1))
            for t in tabs:
                out = (out[:, :, None] * t[:, None, :]).reshape(npts, -1)
            return out

        keep = self._keep
        values = combine(P)[:, keep]
        grads = [combine([D[i] if i == a else P[i] for i in range(d)])[:, keep] for a in range(d)]
        return values, grads

    def to_reference(self, cell: int, point) -> np.ndarray:
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            raise DomainError(f"expected a point with {self.dim} coordinates, got {point}")
        lo = self.mesh.lower[cell]
        h = self.mesh.widths[cell]
        xi = 2.0 * (point - lo) / h - 1.0
        tol = 1e-12
        if np.any(xi < -1.0 - tol) or np.any(xi > 1.0 + tol):
            raise DomainError(f"point {point.tolist()} lies outside the closure of cell {cell}")
        return np.clip(xi, -1.0, 1.0)

    def sample_reference_points(self, n: int = 10) -> np.ndarray:
        """Per-cell sampling grid used for max-norm errors: ``n`` midpoints plus both ends per axis."""
        pts1 = np.concatenate([[-1.0], -1.0 + (2 * np.arange(n) + 1) / n, [1.0]])
        return np.array(list(product(pts1, repeat=self.dim)))

    def physical_points(self, xi: np.ndarray) -> np.ndarray:
        """Map reference points ``(npts, d)`` into every cell: ``(ncells, npts, d)``."""
        mesh = self.mesh
        return mesh.lower[:, None, :] + 0.5 * (xi[None, :, :] + 1.0) * mesh.widths[:, None, :]

    def evaluate_at_reference(self, coeffs: np.ndarray, xi: np.ndarray) -> np.ndarray:
        values, _ = self.reference_tables(xi)
        return (coeffs @ values.T) * self.cell_scale[:, None]

    # ------------------------------------------------------------------ projection
    def project_nodal(self, nodal: np.ndarray) -> np.ndarray:
        """L2 projection of values given at the volume quadrature nodes."""
        shape = (self.mesh.ncells, self.nq)
        nodal = np.asarray(nodal, dtype=float)
        if nodal.shape != shape:
            nodal = np.broadcast_to(nodal, shape)
        tab, fac = self._proj_tables
        return (nodal @ tab) * fac

    def zeros(self) -> "DGField":
        return DGField(self, np.zeros((self.mesh.ncells, self.m)))

    def constant(self, value: float) -> "DGField":
        c = np.zeros((self.mesh.ncells, self.m))
        c[:, 0] = value * self.mesh.volumes ** 0.5
        return DGField(self, c)


def evaluate_pointwise(f: Callable, points: np.ndarray) -> np.ndarray:
    """Call ``f`` with one coordinate array per axis and broadcast to ``points.shape[:-1]``."""
    coords = [points[..., i] for i in range(points.shape[-1])]
    return np.broadcast_to(np.asarray(f(*coords), dtype=float), points.shape[:-1])


@dataclass(eq=False)
class DGField:
    """A function in a :class:`DGSpace`, stored by its modal coefficients."""

    space: DGSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = (self.space.mesh.ncells, self.space.m)
        if self.coeffs.shape != expected:
            raise ConfigurationError(f"coefficient array has shape {self.coeffs.shape}, expected {expected}")

    def at_nodes(self) -> np.ndarray:
        return self.space.values_at_nodes(self.coeffs)

    def gradient_at_nodes(self) -> np.ndarray:
        return self.space.gradients_at_nodes(self.coeffs)

    def copy(self) -> "DGField":
        return DGField(self.space, self.coeffs.copy())

    def _coerce(self, other):
        if isinstance(other, DGField):
            if other.space is not self.space:
                raise ConfigurationError("fields live on different spaces")
            return other.coeffs
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else DGField(self.space, self.coeffs + c)

    def __sub__(self, other):
        c = self._coerce(other)
        return NotImplemented if c is NotImplemented else DGField(self.space, self.coeffs - c)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return DGField(self.space, self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return DGField(self.space, -self.coeffs)

    @property
    def vector(self) -> np.ndarray:
        """Flat coefficient vector (cell-major), a view when possible."""
        return self.coeffs.reshape(-1)


@dataclass(eq=False)
class AuxField:
    """Values of a (generally non-polynomial) function at the volume quadrature nodes."""

    space: DGSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.space.mesh.ncells, self.space.nq)
        if self.values.shape != expected:
            raise ConfigurationError(f"auxiliary array has shape {self.values.shape}, expected {expected}")

    def norm_squared(self) -> float:
        return float(np.sum(self.space.weights * self.values ** 2))


Projectable = Union[DGField, AuxField, np.ndarray, Callable, float]


def nodal_values(space: DGSpace, f: Projectable) -> np.ndarray:
    """Values of ``f`` at the volume quadrature nodes of ``space``."""
    if isinstance(f, DGField):
        return space.values_at_nodes(f.coeffs)
    if isinstance(f, AuxField):
        return f.values
    if callable(f):
        return evaluate_pointwise(f, space.nodes)
    arr = np.asarray(f, dtype=float)
    return np.broadcast_to(arr, (space.mesh.ncells, space.nq))


def l2_project(space: DGSpace, f: Projectable) -> DGField:
    """Piecewise L2 projection onto ``space``.

    ``f`` may be a callable, an :class:`AuxField`, nodal values, a constant
    or a :class:`DGField` (returned unchanged if it lives on ``space``).
    """
    if isinstance(f, DGField) and f.space is space:
        return f.copy()
    return DGField(space, space.project_nodal(nodal_values(space, f)))


def basis_eval(space: DGSpace, cell: int, point) -> tuple[np.ndarray, np.ndarray]:
    """Values ``(m,)`` and physical gradients ``(m, d)`` of all basis functions of ``cell`` at ``point``."""
    xi = space.to_reference(cell, point)
    values, grads = space.reference_tables(xi[None, :])
    s = space.cell_scale[cell]
    g = np.stack([grads[a][0] * space.grad_scale[cell, a] for a in range(space.dim)], axis=1)
    return values[0] * s, g * s


def field_eval(field: DGField, cell: int, point, gradient: bool = False):
    """Evaluate ``field`` restricted to ``cell`` at a point of the cell closure.

    Choosing the cell selects the one-sided trace on a face.
    """
    vals, grads = basis_eval(field.space, cell, point)
    c = field.coeffs[cell]
    if gradient:
        return float(c @ vals), c @ grads
    return float(c @ vals)


def face_average(left, right):
    """``{v}`` from the two one-sided traces."""
    return 0.5 * (np.asarray(left) + np.asarray(right))


def face_jump(left, right):
    """``[v]`` = downstream minus upstream trace along the face normal (left -> right)."""
    return np.asarray(right) - np.asarray(left)
