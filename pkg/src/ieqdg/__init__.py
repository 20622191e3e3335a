"""Energy-stable IEQ discontinuous Galerkin schemes for the Cahn-Hilliard equation."""
from .basis import DGField, DGSpace, l2_project
from .config import RunConfig, parse_config
from .diagnostics import eoc, error_norms, total_mass
from .driver import run_simulation
from .errors import (
    AssemblyError,
    ConfigurationError,
    DomainError,
    IEQDGError,
    SolverError,
    UsageError,
)
from .forms import PenaltyConfig, assemble_bilinear, dg_norm, estimate_beta_star
from .kernels import BACKEND
from .mesh import MeshSpec, build_mesh, uniform_mesh
from .mms import get_case
from .physics import MobilitySpec, PotentialSpec
from .stepper import CahnHilliardModel, advance, initial_state, step_ieq1, step_ieq2

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BACKEND",
    "CahnHilliardModel",
    "ConfigurationError",
    "DGField",
    "DGSpace",
    "DomainError",
    "IEQDGError",
    "MeshSpec",
    "MobilitySpec",
    "PenaltyConfig",
    "PotentialSpec",
    "RunConfig",
    "SolverError",
    "UsageError",
    "advance",
    "assemble_bilinear",
    "build_mesh",
    "dg_norm",
    "eoc",
    "error_norms",
    "estimate_beta_star",
    "get_case",
    "initial_state",
    "l2_project",
    "parse_config",
    "run_simulation",
    "step_ieq1",
    "step_ieq2",
    "total_mass",
    "uniform_mesh",
]
