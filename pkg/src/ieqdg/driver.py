"""Time loop with monitors, diagnostics output and snapshots."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .basis import DGSpace
from .config import RunConfig
from .diagnostics import (
    DiagnosticsRecord,
    energies,
    error_norms,
    modified_energy,
    quadratized_energy,
    total_mass,
)
from .errors import IEQDGError
from .forms import PenaltyConfig
from .initial import initial_data
from .mesh import build_mesh
from .mms import get_case
from .output import ERROR_FIELDS, CsvWriter, diagnostics_writer, write_snapshot
from .stepper import CahnHilliardModel, SchemeState, advance, initial_state

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_MONITOR = 1
EXIT_CONFIG = 2
EXIT_FAILURE = 3


@dataclass
class RunResult:
    """Outcome of :func:`run_simulation`.

    ``lyapunov`` is the sequence the energy monitor checks: the quadratic
    energy for first-order runs, the modified energy from level 1 on for
    BDF2 runs.
    """

    status: int
    state: SchemeState | None
    records: list[DiagnosticsRecord] = field(default_factory=list)
    errors: list[tuple[int, float, float, float]] = field(default_factory=list)
    messages: list[str] = field(default_factory=list)
    mass0: float = math.nan
    max_mass_drift: float = 0.0
    lyapunov: list[float] = field(default_factory=list)
    max_identity_residual: float = 0.0
    output_dir: Path | None = None

    @property
    def monitors_ok(self) -> bool:
        return not self.messages

    def summary(self) -> str:
        n = self.state.n if self.state is not None else 0
        t = self.state.t if self.state is not None else 0.0
        e = self.lyapunov or [math.nan]
        verdict = "ok" if self.status == EXIT_OK else f"status {self.status}"
        return (
            f"steps={n} t={t:.6g} mass0={self.mass0:.17g} max|mass drift|={self.max_mass_drift:.3e} "
            f"energy min={min(e):.10g} max={max(e):.10g} max|identity residual|={self.max_identity_residual:.3e} "
            f"[{verdict}]"
        )


def build_model(cfg: RunConfig) -> CahnHilliardModel:
    mesh = build_mesh(cfg.mesh)
    space = DGSpace(mesh, cfg.degree, cfg.quad_points, family=cfg.family)
    source = get_case(cfg.mms_case, cfg.mesh.bc).source if cfg.mms_case else None
    return CahnHilliardModel(
        space, cfg.potential, cfg.mobility, cfg.epsilon, PenaltyConfig(cfg.beta0, mesh.tau), source=source
    )


class _Monitor:
    def __init__(self, cfg: RunConfig, model: CahnHilliardModel, state: SchemeState, result: RunResult):
        self.cfg = cfg
        self.model = model
        self.res = result
        self.has_source = model.source is not None
        self.tol = cfg.monitors
        self.mass0 = total_mass(state.u)
        self.e0 = quadratized_energy(state.u, state.aux_h, model)
        self.escale = max(abs(self.e0), 1e-300)
        self.measure = model.space.mesh.measure
        result.mass0 = self.mass0
        result.lyapunov.append(self.e0)

    def fire(self, msg: str):
        if len(self.res.messages) < 20:
            log.warning(msg)
        self.res.messages.append(msg)

    def after_step(self, state: SchemeState, info, bdf2_step: bool):
        res = self.res
        rel = abs(info.identity_residual) / max(abs(info.energy_old), self.escale)
        res.max_identity_residual = max(res.max_identity_residual, rel)
        if rel > self.tol.identity_tol:
            self.fire(f"step {state.n}: energy identity residual {rel:.3e} exceeds {self.tol.identity_tol:.0e}")
        if self.has_source:
            return
        drift = abs(total_mass(state.u) - self.mass0)
        res.max_mass_drift = max(res.max_mass_drift, drift)
        if drift > self.tol.mass_tol * abs(self.mass0) + 1e-12 * self.measure:
            self.fire(f"step {state.n}: mass drift {drift:.3e}")
        e_quad = quadratized_energy(state.u, state.aux_h, self.model)
        if self.cfg.scheme == "ieq2":
            if not bdf2_step:
                # first-order start checks the quadratic energy, later steps the modified one
                self._check(e_quad, self.res.lyapunov[-1], state.n)
                self.res.lyapunov.append(modified_energy(state, self.model))
            else:
                e_mod = modified_energy(state, self.model)
                self._check(e_mod, self.res.lyapunov[-1], state.n)
                self.res.lyapunov.append(e_mod)
        else:
            self._check(e_quad, self.res.lyapunov[-1], state.n)
            self.res.lyapunov.append(e_quad)

    def _check(self, e_new: float, e_old: float, n: int):
        if e_new - e_old > self.tol.energy_tol * self.escale:
            self.fire(f"step {n}: energy increased by {e_new - e_old:.3e}")


def run_simulation(cfg: RunConfig, write: bool = True) -> RunResult:
    """Initialize, run ``cfg.steps`` steps and write outputs under ``cfg.output_dir``.

    Never raises for failures during the time loop: they end the run with
    ``status = EXIT_FAILURE`` and the outputs written so far are kept.
    """
    model = build_model(cfg)
    space = model.space
    result = RunResult(EXIT_OK, None, output_dir=cfg.output_dir if write else None)
    case = get_case(cfg.mms_case, cfg.mesh.bc) if cfg.mms_case else None
    u0 = initial_data(cfg.initial, space, cfg.mesh.bc)
    state = initial_state(model, u0, cfg.dt)
    result.state = state
    mon = _Monitor(cfg, model, state, result)

    diag = err = None
    if write:
        diag = diagnostics_writer(cfg.output_dir)
        if case is not None:
            err = CsvWriter(Path(cfg.output_dir) / "errors.csv", ERROR_FIELDS)

    def record(info):
        rec = energies(state, model, cfg.scheme, info)
        result.records.append(rec)
        if diag is not None:
            diag.write(rec.as_row())
        if case is not None:
            l2, linf = error_norms(state.u, case.exact, state.t)
            row = (state.n, state.t, l2, linf)
            result.errors.append(row)
            if err is not None:
                err.write(row)

    def snapshot():
        if write and cfg.snapshot_interval > 0:
            write_snapshot(Path(cfg.output_dir) / f"u_{state.n}.csv", state.u, cfg.snapshot_grid)

    try:
        record(None)
        snapshot()
        for n in range(1, cfg.steps + 1):
            bdf2_step = cfg.scheme == "ieq2" and state.u_prev is not None
            try:
                state, info = advance(state, model, cfg.scheme)
            except IEQDGError as exc:
                solver = model.workspace.solver
                msg = f"step {n} failed at t={state.t + cfg.dt:.6g}: {exc}"
                if solver.last is not None:
                    msg += f" (last solver residual {solver.last.residual:.3e})"
                log.error(msg)
                result.messages.append(msg)
                result.status = EXIT_FAILURE
                break
            result.state = state
            mon.after_step(state, info, bdf2_step)
            if n % cfg.diagnostics_interval == 0 or n == cfg.steps:
                record(info)
            if cfg.snapshot_interval > 0 and (n % cfg.snapshot_interval == 0 or n == cfg.steps):
                snapshot()
    finally:
        for w in (diag, err):
            if w is not None:
                w.close()
    if result.status == EXIT_OK and result.messages:
        result.status = EXIT_MONITOR
    log.info(result.summary())
    return result
