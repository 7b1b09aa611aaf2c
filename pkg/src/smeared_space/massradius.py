"""Compton and Schwarzschild radii, the unified radius and hoop-type conditions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, UnsupportedError
from .scales import PhysicalConstants, planck_scales

__all__ = [
    "MassRadiusRow",
    "compton",
    "schwarzschild",
    "unified_radius",
    "regime",
    "hoop_condition",
    "horizon_bound_condition",
    "emission_mass",
    "default_masses",
    "mass_radius_table",
]

REGIMES = ("particle", "planckian", "black-hole")


@dataclass(frozen=True)
class MassRadiusRow:
    mass: float
    compton: float
    schwarzschild: float
    unified: float
    regime: str

    FIELDS = ("mass_g", "compton_cm", "schwarzschild_cm", "unified_cm", "regime")

    def as_tuple(self):
        return (self.mass, self.compton, self.schwarzschild, self.unified, self.regime)


def _positive(m, name="mass"):
    arr = np.asarray(m, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} must be positive")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def _require_d3(consts: PhysicalConstants) -> None:
    if consts.d != 3:
        raise UnsupportedError("this relation is defined for d = 3 only")


def compton(m, consts: PhysicalConstants):
    """Reduced Compton wavelength ``hbar / (m c)``."""
    return _out(consts.hbar / (_positive(m) * consts.c))


def schwarzschild(m, consts: PhysicalConstants):
    """``(2 G_D m / c^2)^(1/(d-2))``, which is ``2 G m / c^2`` when d = 3.

    This exponent is the one for which the Compton and Schwarzschild lines
    cross at ``m_max = 2^(-1/(d-1)) m_Pl`` with radius ``2^(1/(d-1)) l_Pl``
    in every dimension; it also keeps the radius a length.
    """
    if consts.d <= 2:
        raise DomainError(f"Schwarzschild radius is undefined for d = {consts.d} (exponent 1/(d-2))")
    base = 2.0 * consts.G * _positive(m) / consts.c**2
    return _out(base ** (1.0 / (consts.d - 2)))


def unified_radius(m, consts: PhysicalConstants):
    """``hbar / (2 m c) + 2 G m / c^2``.

    The same two-term curve serves masses on both sides of the Planck mass;
    it is symmetric under ``m -> m_Pl^2 / (4 m)``.
    """
    _require_d3(consts)
    m = _positive(m)
    return _out(consts.hbar / (2.0 * m * consts.c) + 2.0 * consts.G * m / consts.c**2)


def regime(m: float, consts: PhysicalConstants) -> str:
    """``particle`` below the maximum particle mass ``m_Pl / sqrt(2)``,
    ``black-hole`` from ``m_Pl`` up, ``planckian`` in between."""
    _, m_pl = planck_scales(consts)
    m_max = 2.0 ** (-1.0 / (consts.d - 1)) * m_pl
    if m < m_max:
        return "particle"
    if m >= m_pl:
        return "black-hole"
    return "planckian"


def _hoop_sides(delta_x: float, delta_p: float, consts: PhysicalConstants):
    _require_d3(consts)
    if not (delta_x > 0 and delta_p > 0):
        raise DomainError("spreads must be positive")
    l_pl, _ = planck_scales(consts)
    lhs = math.sqrt(delta_x**2 + 2.0 * l_pl**2)
    rhs = 2.0 * consts.G / consts.c**3 * delta_p + consts.hbar / (2.0 * delta_p)
    return lhs, rhs


def hoop_condition(delta_x: float, delta_p: float, consts: PhysicalConstants) -> tuple[bool, float]:
    """Collapse criterion ``sqrt(dx^2 + 2 l_Pl^2) <= (2G/c^3) dp + hbar / (2 dp)``.

    Returns whether it holds and the margin ``rhs - lhs``.
    """
    lhs, rhs = _hoop_sides(delta_x, delta_p, consts)
    return lhs <= rhs, rhs - lhs


def horizon_bound_condition(
    delta_x: float, delta_p: float, consts: PhysicalConstants
) -> tuple[bool, float]:
    """The same two sides read the other way, as a lower bound on the generalized spread.

    Returns whether ``sqrt(dx^2 + 2 l_Pl^2) >= (2G/c^3) dp + hbar / (2 dp)``
    holds and the margin ``lhs - rhs``.
    """
    lhs, rhs = _hoop_sides(delta_x, delta_p, consts)
    return lhs >= rhs, lhs - rhs


def emission_mass(M: float, consts: PhysicalConstants) -> float:
    """Typical mass ``m_Pl^2 / (4 M)`` emitted by a black hole of mass ``M >= m_Pl``."""
    _, m_pl = planck_scales(consts)
    if not M >= m_pl:
        raise DomainError("emission mass is defined for M >= m_Pl only")
    return 0.25 * m_pl**2 / M


def default_masses(consts: PhysicalConstants, decades: float = 4.0, per_decade: int = 20):
    """Log-spaced masses around ``m_Pl / 2`` (the curve minimum), which is included exactly."""
    _, m_pl = planck_scales(consts)
    n = int(round(2 * decades * per_decade)) + 1
    return 0.5 * m_pl * 10.0 ** np.linspace(-decades, decades, n)


def mass_radius_table(
    consts: PhysicalConstants, masses: Sequence[float] | None = None
) -> list[MassRadiusRow]:
    _require_d3(consts)
    masses = default_masses(consts) if masses is None else np.asarray(masses, dtype=float)
    rows = []
    for m in masses:
        m = float(m)
        rows.append(
            MassRadiusRow(
                m,
                compton(m, consts),
                schwarzschild(m, consts),
                unified_radius(m, consts),
                regime(m, consts),
            )
        )
    return rows
