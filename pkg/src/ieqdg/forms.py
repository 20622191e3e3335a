"""Weighted interior-penalty bilinear form, weighted mass forms and the DG norm.

The bilinear form is

    A(a; q, v) = sum_K int_K a grad q . grad v
               + sum_e int_e a ( beta0/h_e [q][v] + {d_nu q}[v] + [q]{d_nu v} ),

summed over interior faces (periodic wrap-around faces included). On
homogeneous Neumann boundaries the boundary face terms vanish, so boundary
faces never enter. The weight ``a`` is sampled at the volume quadrature
nodes inside cells and at the face quadrature nodes on faces (the caller
decides how, e.g. ``M(u_h)`` inside and ``M({u_h})`` on faces).

All operators share one fixed CSR sparsity pattern per space, so the
assembled data arrays can be added directly and the pattern is identical
from step to step.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from . import kernels
from .basis import DGField, DGSpace
from .errors import AssemblyError, ConfigurationError


def default_beta0(degree: int, constant_mobility: bool) -> float:
    """Penalty used in the reference experiments: ``k^2 + k/2`` or ``3k^2 + k/2``."""
    k = degree
    if k == 0:
        return 1.0
    return k * k + 0.5 * k if constant_mobility else 3 * k * k + 0.5 * k


@dataclass(frozen=True)
class PenaltyConfig:
    beta0: float
    tau: int = 1

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ConfigurationError(f"beta0 must be positive, got {self.beta0}")
        if self.tau not in (0, 1):
            raise ConfigurationError(f"tau must be 0 or 1, got {self.tau}")

    @classmethod
    def auto(cls, space: DGSpace, constant_mobility: bool) -> "PenaltyConfig":
        return cls(default_beta0(space.degree, constant_mobility), space.mesh.tau)


@dataclass(eq=False)
class Weight:
    """A coefficient sampled at volume nodes ``(ncells, nq)`` and face nodes (one array per axis)."""

    volume: np.ndarray
    faces: tuple[np.ndarray, ...]

    @classmethod
    def constant(cls, space: DGSpace, value: float) -> "Weight":
        vol = np.full((space.mesh.ncells, space.nq), float(value))
        faces = tuple(
            np.full((len(fs), space.face_weights[fs.axis].size), float(value))
            for fs in space.mesh.interior
        )
        return cls(vol, faces)

    @classmethod
    def from_field(cls, u: DGField, func: Callable[[np.ndarray], np.ndarray]) -> "Weight":
        """``func(u)`` inside cells and ``func({u})`` on faces."""
        space = u.space
        vol = func(u.at_nodes())
        faces = []
        for fs in space.mesh.interior:
            lo, hi = space.traces(u.coeffs, fs.axis)
            faces.append(func(0.5 * (lo + hi)))
        return cls(np.asarray(vol, dtype=float), tuple(np.asarray(f, dtype=float) for f in faces))

    def minimum(self) -> float:
        vals = [self.volume.min()] + [f.min() for f in self.faces if f.size]
        return float(min(vals))

    def maximum(self) -> float:
        vals = [self.volume.max()] + [f.max() for f in self.faces if f.size]
        return float(max(vals))


def _as_weight(space: DGSpace, a) -> Weight:
    if isinstance(a, Weight):
        return a
    if np.isscalar(a):
        return Weight.constant(space, a)
    raise ConfigurationError("weight must be a scalar or a Weight")


def _outer_rows(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row-wise outer products flattened: ``out[p, j*m + l] = x[p, j] * y[p, l]``."""
    return (x[:, :, None] * y[:, None, :]).reshape(x.shape[0], -1)


class FormAssembler:
    """Assembles weighted forms on a fixed sparsity pattern for one space."""

    def __init__(self, space: DGSpace):
        self.space = space
        mesh = space.mesh
        m, d = space.m, space.dim
        n = space.ndofs
        self.n = n
        self.m = m

        jj, ll = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        jj = jj.ravel()
        ll = ll.ravel()

        def block_indices(rc, cc):
            return (rc[:, None] * m + jj[None, :]).ravel(), (cc[:, None] * m + ll[None, :]).ravel()

        cells = np.arange(mesh.ncells)
        rows = [block_indices(cells, cells)[0]]
        cols = [block_indices(cells, cells)[1]]
        for fs in mesh.interior:
            for rc, cc in ((fs.left, fs.left), (fs.left, fs.right), (fs.right, fs.left), (fs.right, fs.right)):
                r, c = block_indices(rc, cc)
                rows.append(r)
                cols.append(c)
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        keys = rows.astype(np.int64) * n + cols
        ukeys = np.unique(keys)
        self.pos = np.searchsorted(ukeys, keys).astype(np.int64)
        self.nnz = int(ukeys.size)
        urows = ukeys // n
        self.indices = (ukeys % n).astype(np.int32)
        self.indptr = np.searchsorted(urows, np.arange(n + 1)).astype(np.int32)
        self.nvol = mesh.ncells * m * m
        self.pos_vol = np.ascontiguousarray(self.pos[: self.nvol])
        # diagonal positions in the data array
        diag_keys = np.arange(n, dtype=np.int64) * (n + 1)
        self.diag_pos = np.searchsorted(ukeys, diag_keys)

        # local tables
        self.vol_tables = [
            _outer_rows(space.vol_grads[a], space.vol_grads[a]) * (space.vol_weights / 2.0 ** d)[:, None]
            for a in range(d)
        ]
        self.mass_table = np.ascontiguousarray(
            _outer_rows(space.vol_values, space.vol_values) * (space.vol_weights / 2.0 ** d)[:, None]
        )
        self.face_tables = []
        for fs in mesh.interior:
            a = fs.axis
            TL, TR = space.trace_lo[a], space.trace_hi[a]
            NL, NR = space.ntrace_lo[a], space.ntrace_hi[a]
            self.face_tables.append(
                dict(
                    tt_ll=_outer_rows(TL, TL),
                    tn_ll=_outer_rows(TL, NL) + _outer_rows(NL, TL),
                    tt_lr=_outer_rows(TL, TR),
                    tn_lr=_outer_rows(TL, NR),
                    nt_lr=_outer_rows(NL, TR),
                    tt_rr=_outer_rows(TR, TR),
                    tn_rr=_outer_rows(TR, NR) + _outer_rows(NR, TR),
                    nn_ll=_outer_rows(NL, NL),
                    nn_lr=_outer_rows(NL, NR),
                    nn_rr=_outer_rows(NR, NR),
                    fw=space.face_weights[a],
                    meas=space.face_measure_scale(a),
                )
            )

    # ------------------------------------------------------------------ local blocks
    def _volume_blocks(self, weight_vol: np.ndarray) -> np.ndarray:
        g = self.space.grad_scale
        out = np.zeros((self.space.mesh.ncells, self.m * self.m))
        for a, tab in enumerate(self.vol_tables):
            out += (weight_vol @ tab) * (g[:, a] ** 2)[:, None]
        return out

    def _face_blocks(self, axis: int, weight_face: np.ndarray, beta0: float):
        sp_ = self.space
        fs = sp_.mesh.interior[axis]
        t = self.face_tables[axis]
        cw = weight_face * t["fw"][None, :] * t["meas"][:, None]
        s = sp_.cell_scale
        g = sp_.grad_scale[:, axis]
        sL, sR = s[fs.left][:, None], s[fs.right][:, None]
        gL, gR = g[fs.left][:, None], g[fs.right][:, None]
        pen = (beta0 / fs.h_e)[:, None]
        ll = sL * sL * (pen * (cw @ t["tt_ll"]) - 0.5 * gL * (cw @ t["tn_ll"]))
        lr = sL * sR * (-pen * (cw @ t["tt_lr"]) - 0.5 * gR * (cw @ t["tn_lr"]) + 0.5 * gL * (cw @ t["nt_lr"]))
        m = self.m
        rl = lr.reshape(-1, m, m).transpose(0, 2, 1).reshape(-1, m * m)
        rr = sR * sR * (pen * (cw @ t["tt_rr"]) + 0.5 * gR * (cw @ t["tn_rr"]))
        return ll, lr, rl, rr

    def _scatter(self, parts) -> np.ndarray:
        vals = np.concatenate([p.ravel() for p in parts])
        return kernels.scatter_add(self.pos, vals, self.nnz)

    # ------------------------------------------------------------------ public
    def bilinear_data(self, a, beta0: float) -> np.ndarray:
        """CSR data of ``A(a; ., .)`` on the shared pattern."""
        w = _as_weight(self.space, a)
        if w.minimum() <= 0.0 or not np.all(np.isfinite(w.volume)):
            raise AssemblyError(
                f"bilinear weight must be positive at every node (min {w.minimum():.3e}); "
                "check the mobility regularization"
            )
        parts = [self._volume_blocks(w.volume)]
        for fs in self.space.mesh.interior:
            parts.extend(self._face_blocks(fs.axis, w.faces[fs.axis], beta0))
        return self._scatter(parts)

    def mass_data(self, nodal_weight) -> np.ndarray:
        """CSR data of the weighted mass form ``(c u, v)`` for ``c`` given at volume nodes."""
        c = np.broadcast_to(np.asarray(nodal_weight, dtype=float), (self.space.mesh.ncells, self.space.nq))
        return kernels.mass_plus(np.zeros(self.nnz), c, self.mass_table, self.pos_vol, self.nnz)

    def matrix(self, data: np.ndarray) -> sp.csr_matrix:
        return sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def face_derivative_form(self, a) -> np.ndarray:
        """Dense matrix of ``sum_e h_e int_e a {d_nu v}^2`` (used by the penalty estimator)."""
        w = _as_weight(self.space, a)
        sp_ = self.space
        parts = [np.zeros((sp_.mesh.ncells, self.m * self.m))]
        for fs in sp_.mesh.interior:
            t = self.face_tables[fs.axis]
            cw = w.faces[fs.axis] * t["fw"][None, :] * t["meas"][:, None] * fs.h_e[:, None]
            s = sp_.cell_scale
            g = sp_.grad_scale[:, fs.axis]
            aL = (s * g)[fs.left][:, None] * 0.5
            aR = (s * g)[fs.right][:, None] * 0.5
            ll = aL * aL * (cw @ t["nn_ll"])
            lr = aL * aR * (cw @ t["nn_lr"])
            m = self.m
            rl = lr.reshape(-1, m, m).transpose(0, 2, 1).reshape(-1, m * m)
            rr = aR * aR * (cw @ t["nn_rr"])
            parts.extend([ll, lr, rl, rr])
        return self.matrix(self._scatter(parts)).toarray()

    def volume_form(self, a) -> np.ndarray:
        """Dense matrix of ``sum_K int_K a |grad v|^2``."""
        w = _as_weight(self.space, a)
        data = kernels.scatter_add(self.pos[: self.nvol], self._volume_blocks(w.volume).ravel(), self.nnz)
        return self.matrix(data).toarray()


def get_assembler(space: DGSpace) -> FormAssembler:
    """The :class:`FormAssembler` of ``space``, built once and stored on the space."""
    asm = getattr(space, "_assembler", None)
    if asm is None:
        asm = FormAssembler(space)
        space._assembler = asm
    return asm


def assemble_bilinear(space: DGSpace, a, cfg: PenaltyConfig) -> sp.csr_matrix:
    """Sparse matrix ``Op`` with ``v^T Op q = A(a; q, v)``."""
    asm = get_assembler(space)
    return asm.matrix(asm.bilinear_data(a, cfg.beta0))


def assemble_weighted_mass(space: DGSpace, nodal_weight) -> sp.csr_matrix:
    asm = get_assembler(space)
    return asm.matrix(asm.mass_data(nodal_weight))


def bilinear_value(space: DGSpace, a, cfg: PenaltyConfig, q: DGField, v: DGField | None = None) -> float:
    """``A(a; q, v)`` (``v`` defaults to ``q``)."""
    op = assemble_bilinear(space, a, cfg)
    v = q if v is None else v
    return float(v.vector @ (op @ q.vector))


def dg_norm(field: DGField, cfg: PenaltyConfig) -> float:
    """Squared DG norm: broken H1 seminorm plus ``beta0/h_e``-weighted jumps on interior faces."""
    space = field.space
    grads = field.gradient_at_nodes()
    total = float(np.sum(space.weights * np.sum(grads ** 2, axis=-1)))
    for fs in space.mesh.interior:
        lo, hi = space.traces(field.coeffs, fs.axis)
        jump2 = (hi - lo) ** 2
        fw = space.face_weights[fs.axis][None, :] * space.face_measure_scale(fs.axis)[:, None]
        total += float(np.sum(fw * jump2 * (cfg.beta0 / fs.h_e)[:, None]))
    return total


def estimate_beta_star(space: DGSpace, a=1.0, mobility_ratio: float = 1.0) -> float:
    """Brute-force coercivity threshold.

    Largest generalized eigenvalue of ``B v = lambda G v`` where ``B`` is the
    face form ``sum_e h_e int_e a {d_nu v}^2`` and ``G`` the volume form
    ``sum_K int_K a |grad v|^2``, restricted to functions without cellwise
    constant modes (the kernel of both forms). Multiply by
    ``mobility_ratio = M_max / M_min`` for the variable-mobility threshold.
    Returns 0 (with a warning) when ``k = 0``.
    """
    if space.degree == 0:
        warnings.warn("k=0: no gradients in the space, beta* is 0 by convention", RuntimeWarning, stacklevel=2)
        return 0.0
    if space.ndofs > 4000:
        raise ConfigurationError(f"dense eigensolve limited to 4000 dofs, space has {space.ndofs}")
    asm = get_assembler(space)
    B = asm.face_derivative_form(a)
    G = asm.volume_form(a)
    keep = np.flatnonzero(np.tile(np.arange(space.m) != 0, space.mesh.ncells))
    Br = B[np.ix_(keep, keep)]
    Gr = G[np.ix_(keep, keep)]
    lam = scipy.linalg.eigh(Br, Gr, eigvals_only=True)
    return float(lam[-1]) * float(mobility_ratio)
