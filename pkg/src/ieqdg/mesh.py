"""Tensor-product rectangular meshes in one and two dimensions.

Cells are numbered lexicographically with the first axis varying slowest
(C order), faces are grouped by the axis of their normal and numbered in
the same order as their left/lower cell. Under periodic boundary conditions
the wrap-around faces are stored as ordinary interior faces, so the set of
boundary faces is empty.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

BC_KINDS = ("periodic", "neumann")


@dataclass(frozen=True, eq=False)
class MeshSpec:
    """Description of a tensor-product mesh.

    Parameters
    ----------
    intervals
        One ``(a, b)`` pair per axis.
    cells
        Number of cells per axis.
    bc
        ``"periodic"`` or ``"neumann"``; applied on every axis.
    breakpoints
        Optional explicit cell boundaries per axis for nonuniform meshes.
        When given they override ``intervals``/``cells``.
    """

    intervals: tuple[tuple[float, float], ...]
    cells: tuple[int, ...]
    bc: str = "periodic"
    breakpoints: tuple[np.ndarray, ...] | None = None

    @property
    def dim(self) -> int:
        return len(self.cells)

    def validate(self) -> None:
        if len(self.intervals) != len(self.cells):
            raise ConfigurationError("intervals and cells must have one entry per axis")
        if self.dim not in (1, 2):
            raise ConfigurationError(f"dimension must be 1 or 2, got {self.dim}")
        if self.bc not in BC_KINDS:
            raise ConfigurationError(f"bc must be one of {BC_KINDS}, got {self.bc!r}")
        for axis, ((a, b), n) in enumerate(zip(self.intervals, self.cells)):
            if not np.isfinite(a) or not np.isfinite(b) or not b > a:
                raise ConfigurationError(f"axis {axis}: need b > a, got [{a}, {b}]")
            if int(n) != n or n < 1:
                raise ConfigurationError(f"axis {axis}: cell count must be >= 1, got {n}")
            if self.bc == "periodic" and n < 2:
                raise ConfigurationError(
                    f"axis {axis}: periodic meshes need at least 2 cells per axis"
                )
        if self.breakpoints is not None:
            if len(self.breakpoints) != self.dim:
                raise ConfigurationError("breakpoints must have one array per axis")
            for axis, bp in enumerate(self.breakpoints):
                bp = np.asarray(bp, dtype=float)
                if bp.ndim != 1 or bp.size != self.cells[axis] + 1:
                    raise ConfigurationError(f"axis {axis}: expected {self.cells[axis] + 1} breakpoints")
                if np.any(np.diff(bp) <= 0):
                    raise ConfigurationError(f"axis {axis}: breakpoints must be strictly increasing")


@dataclass(frozen=True, eq=False)
class FaceSet:
    """Interior faces whose normal points along ``axis``.

    ``left[f]`` and ``right[f]`` are the cells on the lower and upper side;
    the normal is oriented from ``left`` to ``right``.
    """

    axis: int
    left: np.ndarray
    right: np.ndarray
    h_e: np.ndarray
    position: np.ndarray  # coordinate of the face along ``axis`` (seen from the left cell)

    def __len__(self) -> int:
        return int(self.left.size)


@dataclass(frozen=True, eq=False)
class BoundaryFaceSet:
    """Boundary faces normal to ``axis``; ``side`` is -1 (lower) or +1 (upper)."""

    axis: int
    cell: np.ndarray
    side: np.ndarray
    h_e: np.ndarray

    def __len__(self) -> int:
        return int(self.cell.size)


@dataclass(frozen=True, eq=False)
class Mesh:
    spec: MeshSpec
    breakpoints: tuple[np.ndarray, ...]
    shape: tuple[int, ...]
    cell_index: np.ndarray  # (ncells, d) multi-index
    lower: np.ndarray  # (ncells, d)
    widths: np.ndarray  # (ncells, d)
    interior: tuple[FaceSet, ...]
    boundary: tuple[BoundaryFaceSet, ...]
    _volumes: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def bc(self) -> str:
        return self.spec.bc

    @property
    def tau(self) -> int:
        return 1 if self.spec.bc == "periodic" else 0

    @property
    def ncells(self) -> int:
        return int(self.cell_index.shape[0])

    @property
    def volumes(self) -> np.ndarray:
        return self._volumes

    @property
    def centroids(self) -> np.ndarray:
        return self.lower + 0.5 * self.widths

    @property
    def upper(self) -> np.ndarray:
        return self.lower + self.widths

    @property
    def measure(self) -> float:
        return float(np.prod([bp[-1] - bp[0] for bp in self.breakpoints]))

    @property
    def axis_widths(self) -> tuple[np.ndarray, ...]:
        return tuple(np.diff(bp) for bp in self.breakpoints)

    @property
    def is_uniform(self) -> bool:
        return all(np.allclose(w, w[0], rtol=1e-13, atol=0) for w in self.axis_widths)

    def cell_of(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def locate(self, point: Sequence[float]) -> int:
        """Return a cell whose closure contains ``point``."""
        idx = []
        for axis, x in enumerate(np.atleast_1d(np.asarray(point, dtype=float))):
            bp = self.breakpoints[axis]
            if x < bp[0] or x > bp[-1]:
                raise ConfigurationError(f"point {point} lies outside the domain")
            i = int(np.searchsorted(bp, x, side="right")) - 1
            idx.append(min(max(i, 0), self.shape[axis] - 1))
        return self.cell_of(idx)

    def incident_faces(self, cell: int) -> list[tuple[int, int, str]]:
        """List ``(axis, face, role)`` for every face touching ``cell``.

        ``role`` is ``"left"``, ``"right"`` or ``"boundary"``.
        """
        out = []
        for fs in self.interior:
            for f in np.flatnonzero(fs.left == cell):
                out.append((fs.axis, int(f), "left"))
            for f in np.flatnonzero(fs.right == cell):
                out.append((fs.axis, int(f), "right"))
        for bs in self.boundary:
            for f in np.flatnonzero(bs.cell == cell):
                out.append((bs.axis, int(f), "boundary"))
        return out


def _axis_breakpoints(spec: MeshSpec) -> tuple[np.ndarray, ...]:
    if spec.breakpoints is not None:
        return tuple(np.asarray(bp, dtype=float).copy() for bp in spec.breakpoints)
    return tuple(
        np.linspace(a, b, n + 1) for (a, b), n in zip(spec.intervals, spec.cells)
    )


def build_mesh(spec: MeshSpec) -> Mesh:
    """Build the cell and face topology described by ``spec``."""
    spec.validate()
    shape = tuple(int(n) for n in spec.cells)
    bps = _axis_breakpoints(spec)
    d = len(shape)

    grids = np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")
    cell_index = np.stack([g.ravel() for g in grids], axis=1)
    lower = np.stack([bps[i][cell_index[:, i]] for i in range(d)], axis=1)
    widths = np.stack([np.diff(bps[i])[cell_index[:, i]] for i in range(d)], axis=1)
    volumes = np.prod(widths, axis=1)

    cell_ids = np.arange(cell_index.shape[0]).reshape(shape)
    periodic = spec.bc == "periodic"
    interior = []
    boundary = []
    for axis in range(d):
        n = shape[axis]
        w = np.diff(bps[axis])
        left_slices = cell_ids
        right_slices = np.roll(cell_ids, -1, axis=axis)
        keep = np.ones(shape, dtype=bool)
        if not periodic:
            sl = [slice(None)] * d
            sl[axis] = n - 1
            keep[tuple(sl)] = False
        left = left_slices[keep]
        right = right_slices[keep]
        i_left = cell_index[left, axis]
        i_right = cell_index[right, axis]
        h_e = 0.5 * (w[i_left] + w[i_right])
        position = bps[axis][i_left + 1]
        interior.append(FaceSet(axis, left, right, h_e, position))

        if not periodic:
            sl_lo = [slice(None)] * d
            sl_lo[axis] = 0
            sl_hi = [slice(None)] * d
            sl_hi[axis] = n - 1
            lo = cell_ids[tuple(sl_lo)].ravel()
            hi = cell_ids[tuple(sl_hi)].ravel()
            cells = np.concatenate([lo, hi])
            side = np.concatenate([-np.ones(lo.size, int), np.ones(hi.size, int)])
            h_e = w[cell_index[cells, axis]]
            boundary.append(BoundaryFaceSet(axis, cells, side, h_e))

    return Mesh(
        spec=spec,
        breakpoints=bps,
        shape=shape,
        cell_index=cell_index,
        lower=lower,
        widths=widths,
        interior=tuple(interior),
        boundary=tuple(boundary),
        _volumes=volumes,
    )


def uniform_mesh(intervals, cells, bc: str = "periodic") -> Mesh:
    """Shorthand for :func:`build_mesh` on a uniform mesh."""
    if isinstance(cells, int):
        cells = (cells,) * len(intervals)
    return build_mesh(MeshSpec(tuple(tuple(map(float, iv)) for iv in intervals), tuple(cells), bc))
