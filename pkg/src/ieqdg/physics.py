"""Bulk potentials, mobilities and the quadratization kernel ``H``.

All functions are vectorized over NumPy arrays and also accept scalars.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import AuxField, DGSpace, nodal_values
from .errors import ConfigurationError, DomainError

POTENTIALS = ("double_well", "flory_huggins", "regularized_flory_huggins")
MOBILITIES = ("constant", "degenerate", "clamped_degenerate")


def _xlogy(x, y):
    # x * log(y) with 0 * log(0) = 0
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x * np.log(y)
    return np.where(x == 0.0, 0.0, out)


@dataclass(frozen=True)
class PotentialSpec:
    """Bulk potential ``F`` plus the shift ``B`` that keeps ``F + B`` positive.

    ``theta`` and ``theta_c`` parameterize the logarithmic potential
    ``theta/2 (u ln u + (1-u) ln(1-u)) + theta_c/2 u (1-u)``; ``sigma`` is the
    width of the quadratic extension used by the regularized variant.
    """

    kind: str = "double_well"
    theta: float = 2.0
    theta_c: float = 2.0
    sigma: float = 1e-4
    B: float = 1.0

    def __post_init__(self):
        if self.kind not in POTENTIALS:
            raise ConfigurationError(f"potential kind must be one of {POTENTIALS}, got {self.kind!r}")
        if not self.B > 0:
            raise ConfigurationError(f"B must be positive, got {self.B}")
        if self.kind != "double_well":
            if not (self.theta > 0 and self.theta_c > 0):
                raise ConfigurationError("theta and theta_c must be positive")
        if self.kind == "regularized_flory_huggins" and not 0 < self.sigma < 0.5:
            raise ConfigurationError(f"sigma must lie in (0, 1/2), got {self.sigma}")

    # -------------------------------------------------------------- evaluation
    def _check_domain(self, u):
        if self.kind == "flory_huggins" and np.any((u <= 0.0) | (u >= 1.0)):
            bad = np.asarray(u)[(u <= 0.0) | (u >= 1.0)].ravel()[0]
            raise DomainError(
                f"Flory-Huggins potential is only defined on (0, 1), got u={bad!r}; "
                "use the regularized variant"
            )

    def F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "double_well":
            v = u * u - 1.0
            return 0.25 * v * v
        self._check_domain(u)
        th, thc = 0.5 * self.theta, 0.5 * self.theta_c
        quad = thc * u * (1.0 - u)
        if self.kind == "flory_huggins":
            return th * (_xlogy(u, u) + _xlogy(1.0 - u, 1.0 - u)) + quad
        s = self.sigma
        lo = u < s
        hi = u > 1.0 - s
        mid = ~(lo | hi)
        um = np.where(mid, u, 0.5)
        ulo = np.where(lo, u, 0.0)
        uhi = np.where(hi, u, 1.0)
        f_mid = th * (um * np.log(um) + (1.0 - um) * np.log(1.0 - um))
        f_lo = th * ((1.0 - ulo) * np.log(1.0 - ulo) + ulo * np.log(s) + ulo * ulo / (2 * s) - s / 2)
        f_hi = th * (uhi * np.log(uhi) + (1.0 - uhi) * np.log(s) + (1.0 - uhi) ** 2 / (2 * s) - s / 2)
        return np.where(mid, f_mid, np.where(lo, f_lo, f_hi)) + quad

    def dF(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "double_well":
            return u * (u * u - 1.0)
        self._check_domain(u)
        th, thc = 0.5 * self.theta, 0.5 * self.theta_c
        lin = thc * (1.0 - 2.0 * u)
        if self.kind == "flory_huggins":
            return th * (np.log(u) - np.log1p(-u)) + lin
        s = self.sigma
        lo = u < s
        hi = u > 1.0 - s
        mid = ~(lo | hi)
        um = np.where(mid, u, 0.5)
        ulo = np.where(lo, u, 0.0)
        uhi = np.where(hi, u, 1.0)
        d_mid = th * (np.log(um) - np.log1p(-um))
        d_lo = th * (-np.log1p(-ulo) - 1.0 + np.log(s) + ulo / s)
        d_hi = th * (np.log(uhi) + 1.0 - np.log(s) - (1.0 - uhi) / s)
        return np.where(mid, d_mid, np.where(lo, d_lo, d_hi)) + lin

    def d2F(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "double_well":
            return 3.0 * u * u - 1.0
        self._check_domain(u)
        th, thc = 0.5 * self.theta, 0.5 * self.theta_c
        if self.kind == "flory_huggins":
            return th * (1.0 / u + 1.0 / (1.0 - u)) - 2.0 * thc
        s = self.sigma
        lo = u < s
        hi = u > 1.0 - s
        mid = ~(lo | hi)
        um = np.where(mid, u, 0.5)
        ulo = np.where(lo, u, 0.0)
        uhi = np.where(hi, u, 1.0)
        d_mid = th * (1.0 / um + 1.0 / (1.0 - um))
        d_lo = th * (1.0 / (1.0 - ulo) + 1.0 / s)
        d_hi = th * (1.0 / uhi + 1.0 / s)
        return np.where(mid, d_mid, np.where(lo, d_lo, d_hi)) - 2.0 * thc

    def kernel_args(self) -> tuple[int, np.ndarray]:
        """Kind index and ``(theta, theta_c, sigma, B)`` for the compiled kernels."""
        return POTENTIALS.index(self.kind), np.array([self.theta, self.theta_c, self.sigma, self.B])

    def H(self, u):
        """``F'(u) / sqrt(F(u) + B)``."""
        rad = self.F(u) + self.B
        if np.any(rad <= 0.0):
            raise ConfigurationError(
                f"F(u) + B must be positive; min value {np.min(rad):.6g} with B={self.B}. Increase B"
            )
        return self.dF(u) / np.sqrt(rad)


@dataclass(frozen=True)
class MobilitySpec:
    """Mobility ``M(u)``: constant, ``u(1-u)``, or ``u(1-u)`` frozen outside ``[sigma, 1-sigma]``."""

    kind: str = "constant"
    value: float = 1.0
    sigma: float = 1e-4

    def __post_init__(self):
        if self.kind not in MOBILITIES:
            raise ConfigurationError(f"mobility kind must be one of {MOBILITIES}, got {self.kind!r}")
        if self.kind == "constant" and not self.value > 0:
            raise ConfigurationError(f"constant mobility must be positive, got {self.value}")
        if self.kind == "clamped_degenerate" and not 0 < self.sigma < 0.5:
            raise ConfigurationError(f"sigma must lie in (0, 1/2), got {self.sigma}")

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def m_min(self) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "degenerate":
            return 0.0
        return self.sigma * (1.0 - self.sigma)

    @property
    def m_max(self) -> float:
        return self.value if self.kind == "constant" else 0.25

    def M(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.full(u.shape, self.value) if u.ndim else np.float64(self.value)
        if self.kind == "degenerate":
            if np.any((u < 0.0) | (u > 1.0)):
                raise DomainError("degenerate mobility u(1-u) is only valid on [0, 1]; use clamped_degenerate")
            return u * (1.0 - u)
        inside = (u > self.sigma) & (u < 1.0 - self.sigma)
        # the clamped value is written directly: 1 - (1 - sigma) loses digits
        return np.where(inside, u * (1.0 - u), self.m_min)

    def dM(self, u):
        u = np.asarray(u, dtype=float)
        if self.kind == "constant":
            return np.zeros(u.shape) if u.ndim else np.float64(0.0)
        if self.kind == "degenerate":
            return 1.0 - 2.0 * u
        inside = (u > self.sigma) & (u < 1.0 - self.sigma)
        return np.where(inside, 1.0 - 2.0 * u, 0.0)


def eval_potential(spec: PotentialSpec, u):
    """``(F(u), F'(u))``."""
    return spec.F(u), spec.dF(u)


def eval_mobility(spec: MobilitySpec, u):
    return spec.M(u)


def eval_H(spec: PotentialSpec, u):
    return spec.H(u)


def init_aux(spec: PotentialSpec, u0, space: DGSpace) -> AuxField:
    """``U0 = sqrt(F(u0) + B)`` at the volume quadrature nodes of ``space``.

    ``u0`` may be a callable, a :class:`~ieqdg.basis.DGField` or nodal values.
    """
    vals = np.asarray(nodal_values(space, u0), dtype=float)
    rad = spec.F(vals) + spec.B
    bad = np.argwhere(rad <= 0.0)
    if bad.size:
        c, q = bad[0]
        x = space.nodes[c, q]
        raise ConfigurationError(
            f"F(u0) + B = {rad[c, q]:.6g} <= 0 at cell {c}, node {q} (x={x.tolist()}); increase B"
        )
    return AuxField(space, np.sqrt(rad))
