"""Spatial and temporal convergence studies on manufactured solutions."""
from __future__ import annotations

import time
from dataclasses import dataclass

from .basis import DGSpace
from .diagnostics import eoc, error_norms
from .forms import PenaltyConfig, default_beta0
from .mesh import uniform_mesh
from .mms import MMSCase, get_case
from .stepper import CahnHilliardModel, advance, initial_state


@dataclass
class MMSRun:
    case: str
    bc: str
    degree: int
    cells: int
    dt: float
    steps: int
    scheme: str
    family: str
    l2: float
    linf: float
    seconds: float
    width: float

    @property
    def h(self) -> float:
        """Cell width along the first axis."""
        return self.width / self.cells


def run_mms(case: MMSCase | str, degree: int, cells: int, dt: float | None = None, *,
            bc: str | None = None, scheme: str | None = None, final_time: float | None = None,
            family: str = "Q", beta0: float | None = None) -> MMSRun:
    """Solve one manufactured case to ``final_time`` and measure the error there."""
    if isinstance(case, str):
        case = get_case(case, bc)
    dt = case.default_dt(degree) if dt is None else float(dt)
    scheme = scheme or case.scheme
    T = case.final_time if final_time is None else float(final_time)
    steps = max(1, int(round(T / dt)))
    t0 = time.perf_counter()
    mesh = uniform_mesh(case.intervals, cells, case.bc)
    space = DGSpace(mesh, degree, family=family)
    b0 = default_beta0(degree, case.mobility.is_constant) if beta0 is None else beta0
    model = CahnHilliardModel(space, case.potential, case.mobility, case.epsilon,
                              PenaltyConfig(b0, mesh.tau), source=case.source)
    state = initial_state(model, lambda *x: case.exact(*x, 0.0), dt)
    for _ in range(steps):
        state, _ = advance(state, model, scheme, with_info=False)
    l2, linf = error_norms(state.u, case.exact, state.t)
    width = case.intervals[0][1] - case.intervals[0][0]
    return MMSRun(case.case_id, case.bc, degree, cells, dt, steps, scheme, space.family, l2, linf,
                  time.perf_counter() - t0, width)


@dataclass
class StudyRow:
    run: MMSRun
    order_l2: float | None
    order_linf: float | None


def spatial_study(case: str, degrees, meshes, dts=None, *, bc=None, scheme=None, final_time=None,
                  family="Q", progress=None) -> dict[int, list[StudyRow]]:
    """Errors and orders per degree over ``meshes``; ``dts`` maps degree to step (default per case)."""
    mcase = get_case(case, bc)
    out: dict[int, list[StudyRow]] = {}
    for k in degrees:
        dt = None if dts is None else dts[k]
        runs = []
        for n in meshes:
            run = run_mms(mcase, k, n, dt, scheme=scheme, final_time=final_time, family=family)
            runs.append(run)
            if progress:
                progress(run)
        out[k] = _with_orders(runs, [r.h for r in runs])
    return out


def temporal_study(case: str, degree: int, cells: int, dts, *, bc=None, scheme=None, final_time=None,
                   family="Q", progress=None) -> list[StudyRow]:
    """Errors and orders in ``dt`` on a fixed mesh."""
    mcase = get_case(case, bc)
    runs = []
    for dt in dts:
        run = run_mms(mcase, degree, cells, dt, scheme=scheme, final_time=final_time, family=family)
        runs.append(run)
        if progress:
            progress(run)
    return _with_orders(runs, [r.dt for r in runs])


def _with_orders(runs, sizes) -> list[StudyRow]:
    if len(runs) < 2:
        return [StudyRow(r, None, None) for r in runs]
    o2 = eoc([r.l2 for r in runs], sizes)
    oi = eoc([r.linf for r in runs], sizes)
    return [StudyRow(runs[0], None, None)] + [StudyRow(r, a, b) for r, a, b in zip(runs[1:], o2, oi)]
