"""Device parameters, constants and the rf-SQUID double-well potential.

Internally everything runs in natural units: hbar = 1, flux in units of the
flux quantum, energy in units of ``phi0**2 / (4 pi**2 L)``.  In those units
the Hamiltonian reads

    H = -kinetic * d^2/dx^2 + 2 pi^2 (x - f_x)^2 - (1 - eps) beta_L cos(2 pi x)

with ``x = phi / phi0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ParameterError

HBAR = 1.054572e-34
PHI0 = 2.067834e-15


@dataclass(frozen=True)
class Constants:
    hbar: float = HBAR
    phi0: float = PHI0
    h: float = field(init=False)

    def __post_init__(self):
        if not (self.hbar > 0 and self.phi0 > 0):
            raise ParameterError("hbar and phi0 must be positive")
        object.__setattr__(self, "h", 2.0 * math.pi * self.hbar)


DEFAULT_CONSTANTS = Constants()


@dataclass(frozen=True)
class SquidParams:
    """rf-SQUID device parameters in SI units."""

    L: float
    C: float
    Ic: float
    phi_x: float = PHI0 / 2

    @classmethod
    def reference(cls) -> "SquidParams":
        """L = 97 pH, C = 50 fF, Ic = 4 uA, half-flux bias."""
        return cls(L=97e-12, C=50e-15, Ic=4e-6, phi_x=PHI0 / 2)

    def validate(self, consts: Constants = DEFAULT_CONSTANTS) -> "SquidParams":
        for name in ("L", "C", "Ic"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be positive and finite, got {v!r}")
        if not math.isfinite(self.phi_x):
            raise ParameterError("phi_x must be finite")
        b = beta_L(self, consts)
        if b <= 1.0:
            raise ParameterError(f"beta_L = {b:.6g} <= 1: no double well")
        return self


@dataclass(frozen=True)
class ScaledParams:
    """Dimensionless form of :class:`SquidParams`.

    ``energy_unit`` (J) and ``time_unit`` (s) convert scaled quantities back
    to SI; ``time_unit = hbar / energy_unit``.
    """

    kinetic: float
    inductive: float
    beta_L: float
    f_x: float
    energy_unit: float
    time_unit: float
    consts: Constants = DEFAULT_CONSTANTS

    def to_si(self) -> SquidParams:
        c = self.consts
        L = c.phi0**2 / (4 * math.pi**2 * self.energy_unit)
        Ic = self.beta_L * c.phi0 / (2 * math.pi * L)
        C = c.hbar**2 / (2 * self.kinetic * c.phi0**2 * self.energy_unit)
        return SquidParams(L=L, C=C, Ic=Ic, phi_x=self.f_x * c.phi0)

    def potential(self, x, eps: float = 0.0):
        """Scaled potential at flux ``x`` (units of phi0)."""
        x = np.asarray(x, dtype=float)
        return (self.inductive * (x - self.f_x) ** 2
                - (1.0 - eps) * self.beta_L * np.cos(2 * math.pi * x))

    def energy_to_hz(self, e):
        return np.asarray(e) * self.energy_unit / self.consts.h

    def time_to_si(self, t):
        return np.asarray(t) * self.time_unit

    def time_from_si(self, t):
        return np.asarray(t) / self.time_unit


def beta_L(params: SquidParams, consts: Constants = DEFAULT_CONSTANTS) -> float:
    """Screening parameter 2 pi L Ic / phi0."""
    return 2 * math.pi * params.L * params.Ic / consts.phi0


def _check_eps(eps: float) -> None:
    if not (0.0 <= eps < 0.5):
        raise ParameterError(f"suppression fraction must lie in [0, 0.5), got {eps!r}")


def potential(params: SquidParams, eps: float, phi, consts: Constants = DEFAULT_CONSTANTS):
    """Potential energy (J) at flux ``phi`` (Wb) with Ic suppressed by ``eps``."""
    params.validate(consts)
    _check_eps(eps)
    phi = np.asarray(phi, dtype=float)
    phi0 = consts.phi0
    return ((phi - params.phi_x) ** 2 / (2 * params.L)
            - (1.0 - eps) * params.Ic * phi0 / (2 * math.pi) * np.cos(2 * math.pi * phi / phi0))


def nondimensionalize(params: SquidParams, consts: Constants = DEFAULT_CONSTANTS) -> ScaledParams:
    params.validate(consts)
    e_unit = consts.phi0**2 / (4 * math.pi**2 * params.L)
    return ScaledParams(
        kinetic=consts.hbar**2 / (2 * params.C * consts.phi0**2) / e_unit,
        inductive=2 * math.pi**2,
        beta_L=beta_L(params, consts),
        f_x=params.phi_x / consts.phi0,
        energy_unit=e_unit,
        time_unit=consts.hbar / e_unit,
        consts=consts,
    )


@dataclass(frozen=True)
class WellGeometry:
    """Extrema of the double well, flux in units of phi0, energy scaled."""

    x_left: float
    x_right: float
    x_barrier: float
    u_min: float
    u_barrier: float

    @property
    def barrier_height(self) -> float:
        return self.u_barrier - self.u_min


def well_geometry(scaled: ScaledParams, eps: float = 0.0, n_scan: int = 20001) -> WellGeometry:
    """Locate both minima and the barrier top by dense scan plus bounded refinement."""
    _check_eps(eps)
    x = np.linspace(scaled.f_x - 1.0, scaled.f_x + 1.0, n_scan)
    u = scaled.potential(x, eps)
    interior = np.arange(1, n_scan - 1)
    is_min = interior[(u[interior] < u[interior - 1]) & (u[interior] <= u[interior + 1])]
    is_max = interior[(u[interior] > u[interior - 1]) & (u[interior] >= u[interior + 1])]
    if len(is_min) < 2 or len(is_max) < 1:
        raise ParameterError("potential has no double well at this suppression")
    dx = x[1] - x[0]

    def refine(i, sign):
        res = minimize_scalar(lambda s: sign * float(scaled.potential(s, eps)),
                              bounds=(x[i] - dx, x[i] + dx), method="bounded",
                              options={"xatol": 1e-13})
        return float(res.x)

    # two minima closest to the bias point bracket the central barrier
    mins = sorted(is_min, key=lambda i: abs(x[i] - scaled.f_x))[:2]
    mins = sorted(mins)
    between = [i for i in is_max if mins[0] < i < mins[1]]
    if not between:
        raise ParameterError("no barrier between the two wells")
    xl, xr = refine(mins[0], 1.0), refine(mins[1], 1.0)
    xb = refine(between[0], -1.0)
    ul, ur = float(scaled.potential(xl, eps)), float(scaled.potential(xr, eps))
    return WellGeometry(xl, xr, xb, min(ul, ur), float(scaled.potential(xb, eps)))
