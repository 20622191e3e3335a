"""Run configuration: TOML parsing, validation and defaults.

A configuration file has the sections ``mesh``, ``discretization``,
``time``, ``physics``, ``initial``, ``output`` and ``monitors`` plus an
optional top-level ``seed``. Unknown keys are rejected. Minimal example::

    [mesh]
    cells = 40

    [discretization]
    degree = 1

    [time]
    dt = 1e-3
    final_time = 1.0

    [initial]
    kind = "mms"
    case = "dw-1d"

For ``kind = "mms"`` the domain, physics, scheme and final time default to
the manufactured case and the ``physics`` section must be omitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import tomli

from .basis import FAMILIES
from .errors import ConfigurationError
from .forms import default_beta0
from .mesh import BC_KINDS, MeshSpec
from .mms import get_case, normalize_case_id
from .physics import MOBILITIES, POTENTIALS, MobilitySpec, PotentialSpec
from .stepper import SCHEMES

IC_KINDS = ("mms", "constant", "constant_regions", "random_perturbation", "expression")

_SECTIONS: dict[str, set[str]] = {
    "mesh": {"intervals", "cells", "bc"},
    "discretization": {"degree", "family", "beta0", "quad_points"},
    "time": {"dt", "final_time", "steps", "scheme"},
    "physics": {
        "epsilon", "B", "potential", "theta", "theta_c", "sigma",
        "mobility", "mobility_value", "mobility_sigma",
    },
    "initial": {"kind", "case", "value", "background", "regions", "base", "amplitude", "seed", "expression"},
    "output": {"directory", "snapshot_interval", "diagnostics_interval", "snapshot_grid"},
    "monitors": {"energy_tol", "mass_tol", "identity_tol"},
}
_TOP_LEVEL = {"seed"} | set(_SECTIONS)


@dataclass(frozen=True)
class Region:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    value: float


@dataclass(frozen=True)
class InitialCondition:
    """Initial data description; which fields matter depends on ``kind``."""

    kind: str
    case: str | None = None
    value: float = 0.0
    background: float = 0.0
    regions: tuple[Region, ...] = ()
    base: float = 0.0
    amplitude: float = 0.0
    seed: int | None = None
    expression: str | None = None


@dataclass(frozen=True)
class Monitors:
    """Relative tolerances of the invariant monitors."""

    energy_tol: float = 1e-9
    mass_tol: float = 1e-10
    identity_tol: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    mesh: MeshSpec
    degree: int
    dt: float
    steps: int
    scheme: str
    epsilon: float
    potential: PotentialSpec
    mobility: MobilitySpec
    beta0: float
    initial: InitialCondition
    family: str = "Q"
    quad_points: int | None = None
    beta0_auto: bool = True
    seed: int = 0
    output_dir: Path = Path("ieqdg_output")
    snapshot_interval: int = 0
    diagnostics_interval: int = 1
    snapshot_grid: int = 0
    monitors: Monitors = field(default_factory=Monitors)

    @property
    def final_time(self) -> float:
        return self.steps * self.dt

    @property
    def mms_case(self) -> str | None:
        return self.initial.case if self.initial.kind == "mms" else None

    def with_seed(self, seed: int) -> "RunConfig":
        """Copy with the run seed (and a random initial condition's seed) replaced."""
        ic = self.initial
        if ic.kind == "random_perturbation":
            ic = replace(ic, seed=int(seed))
        return replace(self, seed=int(seed), initial=ic)


# ---------------------------------------------------------------------------
def _check_keys(name: str, table: dict, allowed: set[str]):
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in [{name}]: {', '.join(unknown)}; allowed: {sorted(allowed)}")


def _number(table: dict, key: str, section: str, default=None, positive=False, integer=False):
    if key not in table:
        if default is None:
            raise ConfigurationError(f"missing required key {section}.{key}")
        return default
    val = table[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigurationError(f"{section}.{key} must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigurationError(f"{section}.{key} must be an integer, got {val!r}")
    if not math.isfinite(val):
        raise ConfigurationError(f"{section}.{key} must be finite, got {val!r}")
    if positive and not val > 0:
        raise ConfigurationError(f"{section}.{key} must be positive, got {val!r}")
    return int(val) if integer else float(val)


def _choice(table: dict, key: str, section: str, choices, default):
    val = table.get(key, default)
    if val not in choices:
        raise ConfigurationError(f"{section}.{key} must be one of {list(choices)}, got {val!r}")
    return val


def _intervals(raw, section="mesh.intervals") -> tuple[tuple[float, float], ...]:
    try:
        out = tuple((float(a), float(b)) for a, b in raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{section} must be a list of [a, b] pairs, got {raw!r}") from None
    return out


def _initial(tab: dict, dim: int, intervals, seed: int) -> InitialCondition:
    _check_keys("initial", tab, _SECTIONS["initial"])
    kind = _choice(tab, "kind", "initial", IC_KINDS, None)
    if kind == "mms":
        if "case" not in tab:
            raise ConfigurationError("missing required key initial.case for kind = 'mms'")
        return InitialCondition(kind, case=normalize_case_id(str(tab["case"])))
    if kind == "constant":
        return InitialCondition(kind, value=_number(tab, "value", "initial"))
    if kind == "constant_regions":
        regions = []
        for i, reg in enumerate(tab.get("regions", [])):
            if not isinstance(reg, dict) or set(reg) != {"lower", "upper", "value"}:
                raise ConfigurationError(f"initial.regions[{i}] needs exactly the keys lower, upper, value")
            lo = tuple(float(v) for v in reg["lower"])
            hi = tuple(float(v) for v in reg["upper"])
            if len(lo) != dim or len(hi) != dim:
                raise ConfigurationError(f"initial.regions[{i}]: lower/upper need {dim} coordinates")
            for a, (lo_a, hi_a), (ia, ib) in zip(range(dim), zip(lo, hi), intervals):
                if not (ia <= lo_a < hi_a <= ib):
                    raise ConfigurationError(f"initial.regions[{i}] axis {a}: box [{lo_a}, {hi_a}] not inside [{ia}, {ib}]")
            regions.append(Region(lo, hi, _number(reg, "value", f"initial.regions[{i}]")))
        return InitialCondition(kind, background=_number(tab, "background", "initial"), regions=tuple(regions))
    if kind == "random_perturbation":
        amp = _number(tab, "amplitude", "initial", positive=True)
        s = _number(tab, "seed", "initial", default=seed, integer=True)
        return InitialCondition(kind, base=_number(tab, "base", "initial"), amplitude=amp, seed=s)
    expr = tab.get("expression")
    if not isinstance(expr, str) or not expr.strip():
        raise ConfigurationError("initial.expression must be a non-empty string")
    return InitialCondition(kind, expression=expr)


def config_from_dict(data: dict[str, Any], base_dir: Path | None = None) -> RunConfig:
    """Validate a parsed configuration mapping; see the module docstring."""
    _check_keys("top level", data, _TOP_LEVEL)
    for name, allowed in _SECTIONS.items():
        tab = data.get(name, {})
        if not isinstance(tab, dict):
            raise ConfigurationError(f"[{name}] must be a table")
        _check_keys(name, tab, allowed)
    mesh_t = data.get("mesh", {})
    disc = data.get("discretization", {})
    time_t = data.get("time", {})
    phys = data.get("physics", {})
    init_t = data.get("initial")
    out_t = data.get("output", {})
    mon_t = data.get("monitors", {})
    if init_t is None:
        raise ConfigurationError("missing required section [initial]")
    seed = _number(data, "seed", "top level", default=0, integer=True)

    case = None
    if init_t.get("kind") == "mms":
        if phys:
            raise ConfigurationError("[physics] must be omitted for kind = 'mms'; the case fixes it")
        bc = _choice(mesh_t, "bc", "mesh", BC_KINDS, "periodic")
        case = get_case(str(init_t.get("case", "")), bc)
        intervals = case.intervals
        if "intervals" in mesh_t and _intervals(mesh_t["intervals"]) != tuple(case.intervals):
            raise ConfigurationError(f"mesh.intervals must be {list(case.intervals)} for case {case.case_id} ({bc})")
    else:
        if "intervals" not in mesh_t:
            raise ConfigurationError("missing required key mesh.intervals")
        intervals = _intervals(mesh_t["intervals"])
        bc = _choice(mesh_t, "bc", "mesh", BC_KINDS, "periodic")
    dim = len(intervals)
    cells = mesh_t.get("cells")
    if cells is None:
        raise ConfigurationError("missing required key mesh.cells")
    if isinstance(cells, int) and not isinstance(cells, bool):
        cells = [cells] * dim
    if not isinstance(cells, list) or len(cells) != dim or not all(isinstance(n, int) for n in cells):
        raise ConfigurationError(f"mesh.cells must be an integer or a list of {dim} integers, got {cells!r}")
    mesh = MeshSpec(tuple(intervals), tuple(cells), bc)
    mesh.validate()

    degree = _number(disc, "degree", "discretization", integer=True)
    if not 0 <= degree <= 4:
        raise ConfigurationError(f"discretization.degree must be in [0, 4], got {degree}")
    family = str(disc.get("family", "Q")).upper()
    if family not in FAMILIES:
        raise ConfigurationError(f"discretization.family must be one of {FAMILIES}, got {family!r}")
    qp = disc.get("quad_points")
    if qp is not None:
        qp = _number(disc, "quad_points", "discretization", integer=True)

    dt = _number(time_t, "dt", "time", positive=True)
    if "steps" in time_t and "final_time" in time_t:
        raise ConfigurationError("give either time.steps or time.final_time, not both")
    if "steps" in time_t:
        steps = _number(time_t, "steps", "time", integer=True)
        if steps < 1:
            raise ConfigurationError(f"time.steps must be >= 1, got {steps}")
    else:
        T = _number(time_t, "final_time", "time", default=case.final_time if case else None)
        if not T >= dt:
            raise ConfigurationError(f"time.final_time must be >= time.dt, got T={T}, dt={dt}")
        steps = int(round(T / dt))
        if abs(steps * dt - T) > 1e-9 * T:
            raise ConfigurationError(f"time.final_time={T} is not a multiple of time.dt={dt}")
    scheme = _choice(time_t, "scheme", "time", SCHEMES, case.scheme if case else "ieq1")

    if case is not None:
        epsilon, potential, mobility = case.epsilon, case.potential, case.mobility
    else:
        epsilon = _number(phys, "epsilon", "physics", positive=True)
        pkind = _choice(phys, "potential", "physics", POTENTIALS, "double_well")
        potential = PotentialSpec(
            pkind,
            theta=_number(phys, "theta", "physics", default=2.0),
            theta_c=_number(phys, "theta_c", "physics", default=2.0),
            sigma=_number(phys, "sigma", "physics", default=1e-4),
            B=_number(phys, "B", "physics", default=1.0),
        )
        mkind = _choice(phys, "mobility", "physics", MOBILITIES, "constant")
        mobility = MobilitySpec(
            mkind,
            value=_number(phys, "mobility_value", "physics", default=1.0),
            sigma=_number(phys, "mobility_sigma", "physics", default=1e-4),
        )

    beta_raw = disc.get("beta0", "auto")
    if beta_raw == "auto":
        beta0 = default_beta0(degree, mobility.is_constant)
        auto = True
    else:
        beta0 = _number(disc, "beta0", "discretization", positive=True)
        auto = False

    initial = _initial(init_t, dim, intervals, seed)

    out_dir = Path(out_t.get("directory", "ieqdg_output"))
    if base_dir is not None and not out_dir.is_absolute():
        out_dir = base_dir / out_dir
    snap = _number(out_t, "snapshot_interval", "output", default=0, integer=True)
    diag = _number(out_t, "diagnostics_interval", "output", default=1, integer=True)
    grid = _number(out_t, "snapshot_grid", "output", default=0, integer=True)
    if snap < 0 or diag < 1 or grid < 0:
        raise ConfigurationError("output intervals must be >= 0 (snapshots) and >= 1 (diagnostics)")
    monitors = Monitors(
        energy_tol=_number(mon_t, "energy_tol", "monitors", default=1e-9, positive=True),
        mass_tol=_number(mon_t, "mass_tol", "monitors", default=1e-10, positive=True),
        identity_tol=_number(mon_t, "identity_tol", "monitors", default=1e-8, positive=True),
    )
    return RunConfig(
        mesh=mesh, degree=degree, dt=dt, steps=steps, scheme=scheme, epsilon=epsilon,
        potential=potential, mobility=mobility, beta0=beta0, initial=initial, family=family,
        quad_points=qp, beta0_auto=auto, seed=seed, output_dir=out_dir, snapshot_interval=snap,
        diagnostics_interval=diag, snapshot_grid=grid, monitors=monitors,
    )


def parse_config(path, relative_output: bool = False) -> RunConfig:
    """Read and validate a TOML run configuration.

    With ``relative_output`` a relative ``output.directory`` is resolved
    against the configuration file's directory instead of the working
    directory.
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomli.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid TOML: {exc}") from exc
    return config_from_dict(data, path.parent if relative_output else None)


def parse_config_text(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML: {exc}") from exc
    return config_from_dict(data)


def preset_names() -> list[str]:
    """Names of the bundled example configurations."""
    from importlib.resources import files

    return sorted(p.name[:-5] for p in files("ieqdg").joinpath("presets").iterdir() if p.name.endswith(".toml"))


def preset_path(name: str) -> Path:
    """Path of a bundled configuration, e.g. ``preset_path("ex5_6_square")``."""
    from importlib.resources import files

    if name not in preset_names():
        raise ConfigurationError(f"unknown preset {name!r}; available: {preset_names()}")
    return Path(str(files("ieqdg").joinpath("presets", f"{name}.toml")))
