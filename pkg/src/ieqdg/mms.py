"""Manufactured solutions for convergence studies.

Each case fixes a domain, boundary condition, model parameters, a closed
form exact solution and the source that makes it solve

    u_t = div(M(u) grad w) + s,    w = -eps^2 lap u + F'(u).

Separable exact solutions ``u = c + A exp(-lam t) prod_i sin(k_i x_i)``
have ``lap p = -kappa p`` for ``p = u - c`` and a closed form
``|grad p|^2``, which gives

    s = -lam p - M [ F''' |grad p|^2 - kappa (eps^2 kappa + F'') p ]
        - M' (eps^2 kappa + F'') |grad p|^2.

A fourth-order finite-difference residual oracle checks every source.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigurationError
from .physics import MobilitySpec, PotentialSpec
from .stepper import SeparableSource

CASE_IDS = ("dw_1d", "dw_2d", "fh_2d", "deg_fh_2d")

# time step per degree used for spatial studies
DEFAULT_DT = {
    "dw_1d": {1: 1e-3, 2: 1e-4, 3: 1e-5},
    "dw_2d": {1: 1e-3, 2: 1e-4, 3: 1e-5},
    "fh_2d": {1: 1e-3, 2: 1e-4, 3: 5e-6},
    "deg_fh_2d": {1: 1e-3, 2: 1e-4, 3: 5e-6},
}


@dataclass(frozen=True, eq=False)
class MMSCase:
    """One manufactured-solution setup.

    ``exact`` and ``source`` take one coordinate array per axis followed by
    ``t``. ``true_potential`` and ``true_mobility`` are the unregularized
    functions the source was derived from; the solver uses ``potential``
    and ``mobility``.
    """

    case_id: str
    bc: str
    intervals: tuple[tuple[float, float], ...]
    epsilon: float
    potential: PotentialSpec
    mobility: MobilitySpec
    scheme: str
    final_time: float
    exact: Callable = field(repr=False)
    source: Callable = field(repr=False)
    true_potential: PotentialSpec = field(repr=False, default=None)
    true_mobility: MobilitySpec = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return len(self.intervals)

    def default_dt(self, degree: int) -> float:
        table = DEFAULT_DT[self.case_id]
        return table.get(degree, min(table.values()))


def normalize_case_id(case_id: str) -> str:
    cid = case_id.strip().lower().replace("-", "_")
    if cid not in CASE_IDS:
        raise ConfigurationError(
            f"unknown MMS case {case_id!r}; expected one of {[c.replace('_', '-') for c in CASE_IDS]}"
        )
    return cid


# ---------------------------------------------------------------------------
# separable sine products
@dataclass(frozen=True)
class _SineProduct:
    """``u = c + amp exp(-lam t) prod sin(k x_i)`` with the same wave number on every axis."""

    c: float
    amp: float
    lam: float
    k: float
    dim: int

    @property
    def kappa(self) -> float:
        return self.dim * self.k ** 2

    def shape(self, *x):
        out = np.sin(self.k * x[0])
        for xi in x[1:]:
            out = out * np.sin(self.k * xi)
        return out

    def grad_sq_shape(self, *x):
        """``|grad prod sin|^2``."""
        total = 0.0
        for a in range(self.dim):
            term = (self.k * np.cos(self.k * x[a])) ** 2
            for b in range(self.dim):
                if b != a:
                    term = term * np.sin(self.k * x[b]) ** 2
            total = total + term
        return total

    def p(self, *args):
        *x, t = args
        return self.amp * np.exp(-self.lam * t) * self.shape(*x)

    def u(self, *args):
        return self.c + self.p(*args)

    def grad_p_sq(self, *args):
        *x, t = args
        return (self.amp * np.exp(-self.lam * t)) ** 2 * self.grad_sq_shape(*x)


def general_source(sol: _SineProduct, eps: float, d2F: Callable, d3F: Callable, M: Callable, dM: Callable):
    """Source for a separable exact solution and arbitrary ``F``, ``M``."""

    def s(*args):
        u = sol.u(*args)
        p = sol.p(*args)
        g2 = sol.grad_p_sq(*args)
        stiff = eps ** 2 * sol.kappa + d2F(u)
        return -sol.lam * p - M(u) * (d3F(u) * g2 - sol.kappa * stiff * p) - dM(u) * stiff * g2

    return s


def _fh_d3(theta: float):
    def d3(u):
        return 0.5 * theta * (-1.0 / u ** 2 + 1.0 / (1.0 - u) ** 2)

    return d3


# ---------------------------------------------------------------------------
# printed sources
def dw_1d_source(x, t):
    """Source of the 1D double-well case (``eps = 1``)."""
    e2 = np.exp(-2.0 * t)
    return -np.exp(-t) * np.sin(x) * (3.0 * e2 * np.cos(2.0 * x) + 3.0 * e2 * np.cos(x) ** 2 + 1.0)


def dw_2d_source(eps: float):
    def s(x, y, t):
        w = 0.1 * np.exp(-t / 4.0) * np.sin(x / 2.0) * np.sin(y / 2.0)
        v = (0.1 * np.exp(-t / 4.0) * np.cos(x / 2.0) * np.sin(y / 2.0)) ** 2 + (
            0.1 * np.exp(-t / 4.0) * np.sin(x / 2.0) * np.cos(y / 2.0)
        ) ** 2
        return -w / 4.0 + eps ** 2 * w / 4.0 - 1.5 * w * v + 1.5 * w ** 3 - w / 2.0

    return s


def _dw_1d_separable() -> SeparableSource:
    # -e^{-t} sin x - 3 e^{-3t} sin x (cos 2x + cos^2 x)
    return SeparableSource(
        [
            (lambda t: -np.exp(-t), np.sin),
            (lambda t: -3.0 * np.exp(-3.0 * t), lambda x: np.sin(x) * (np.cos(2.0 * x) + np.cos(x) ** 2)),
        ]
    )


def _dw_2d_separable(eps: float) -> SeparableSource:
    def f1(x, y):
        return 0.1 * (-0.75 + eps ** 2 / 4.0) * np.sin(x / 2.0) * np.sin(y / 2.0)

    def f3(x, y):
        S = np.sin(x / 2.0) * np.sin(y / 2.0)
        V = (np.cos(x / 2.0) * np.sin(y / 2.0)) ** 2 + (np.sin(x / 2.0) * np.cos(y / 2.0)) ** 2
        return -1.5 * 1e-3 * S * V + 1.5 * 1e-3 * S ** 3

    return SeparableSource([(lambda t: np.exp(-t / 4.0), f1), (lambda t: np.exp(-0.75 * t), f3)])


# ---------------------------------------------------------------------------
_DOMAINS = {
    "dw_1d": {"periodic": ((0.0, 2 * np.pi),)},
    "dw_2d": {"periodic": ((0.0, 4 * np.pi),) * 2, "neumann": ((-np.pi, 3 * np.pi),) * 2},
    "fh_2d": {"periodic": ((0.0, 8 * np.pi),) * 2, "neumann": ((-2 * np.pi, 2 * np.pi),) * 2},
    "deg_fh_2d": {"periodic": ((0.0, 4 * np.pi),) * 2, "neumann": ((-np.pi, 3 * np.pi),) * 2},
}


def get_case(case_id: str, bc: str | None = None, fast_source: bool = True) -> MMSCase:
    """Build a manufactured-solution case.

    ``bc`` defaults to periodic. With ``fast_source`` the double-well
    cases use an equivalent :class:`~ieqdg.stepper.SeparableSource`.
    """
    cid = normalize_case_id(case_id)
    bc = (bc or "periodic").lower()
    domains = _DOMAINS[cid]
    if bc not in domains:
        raise ConfigurationError(f"case {cid!r} supports bc in {sorted(domains)}, got {bc!r}")
    intervals = domains[bc]

    if cid == "dw_1d":
        sol = _SineProduct(0.0, 1.0, 1.0, 1.0, 1)
        pot = PotentialSpec("double_well", B=1.0)
        mob = MobilitySpec("constant", 1.0)
        src = _dw_1d_separable() if fast_source else dw_1d_source
        return MMSCase(cid, bc, intervals, 1.0, pot, mob, "ieq2", 1.0, sol.u, src, pot, mob)
    if cid == "dw_2d":
        eps = 0.1
        sol = _SineProduct(0.0, 0.1, 0.25, 0.5, 2)
        pot = PotentialSpec("double_well", B=1.0)
        mob = MobilitySpec("constant", 1.0)
        src = _dw_2d_separable(eps) if fast_source else dw_2d_source(eps)
        return MMSCase(cid, bc, intervals, eps, pot, mob, "ieq1", 0.01, sol.u, src, pot, mob)

    theta = theta_c = 2.0
    true_pot = PotentialSpec("flory_huggins", theta, theta_c, B=10.0)
    pot = PotentialSpec("regularized_flory_huggins", theta, theta_c, sigma=1e-4, B=10.0)
    if cid == "fh_2d":
        sol = _SineProduct(0.5, 0.1, 0.25, 0.25, 2)
        mob = true_mob = MobilitySpec("constant", 1.0)
        scheme = "ieq2"
    else:
        sol = _SineProduct(0.5, 0.4, 0.25, 0.5, 2)
        true_mob = MobilitySpec("degenerate")
        mob = MobilitySpec("clamped_degenerate", sigma=1e-4)
        scheme = "ieq1"
    src = general_source(sol, 1.0, true_pot.d2F, _fh_d3(theta), true_mob.M, true_mob.dM)
    return MMSCase(cid, bc, intervals, 1.0, pot, mob, scheme, 0.01, sol.u, src, true_pot, true_mob)


def exact_solution(case: MMSCase, x, t):
    """Exact solution at points ``x`` (scalar in 1D, ``(..., d)`` array or tuple of axes)."""
    return case.exact(*_axes(case, x), t)


def source_term(case: MMSCase, x, t):
    return case.source(*_axes(case, x), t)


def _axes(case: MMSCase, x):
    if isinstance(x, tuple):
        return x
    arr = np.asarray(x, dtype=float)
    if case.dim == 1 and (arr.ndim == 0 or arr.shape[-1] != 1):
        return (arr,)
    return tuple(arr[..., i] for i in range(case.dim))


# ---------------------------------------------------------------------------
def _d1(f, x, a, h):
    def shift(s):
        y = list(x)
        y[a] = y[a] + s * h
        return f(*y)

    return (-shift(2) + 8.0 * shift(1) - 8.0 * shift(-1) + shift(-2)) / (12.0 * h)


def _d2(f, x, a, h):
    def shift(s):
        y = list(x)
        y[a] = y[a] + s * h
        return f(*y)

    return (-shift(2) + 16.0 * shift(1) - 30.0 * f(*x) + 16.0 * shift(-1) - shift(-2)) / (12.0 * h * h)


def residual_oracle(case: MMSCase, x, t, h: float | None = None, source: Callable | None = None):
    """``u_t - div(M grad w) - s`` by fourth-order central differences of the exact solution.

    ``h`` defaults to ``1e-3`` times the domain width; ``source`` overrides
    the case source (use ``lambda *a: 0`` for a negative control).
    """
    axes = tuple(np.asarray(a, dtype=float) for a in _axes(case, x))
    d = case.dim
    if h is None:
        h = 1e-3 * max(b - a for a, b in case.intervals)
    pot = case.true_potential or case.potential
    mob = case.true_mobility or case.mobility
    eps2 = case.epsilon ** 2

    def u(*y):
        return case.exact(*y, t)

    def w(*y):
        return -eps2 * sum(_d2(u, y, a, h) for a in range(d)) + pot.dF(u(*y))

    def flux(a):
        def g(*y):
            return mob.M(u(*y)) * _d1(w, y, a, h)

        return g

    ut = _d1(lambda tt: case.exact(*axes, tt), (t,), 0, 1e-3)
    div = sum(_d1(flux(a), axes, a, h) for a in range(d))
    s = (source or case.source)(*axes, t)
    return ut - div - s
