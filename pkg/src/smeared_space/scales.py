"""Physical scales of the smeared-space model in cgs units and any dimension.

Every function here is a closed-form evaluation (plus one quadrature) over an
immutable :class:`PhysicalConstants`.  Powers with exponent ``1/(d-1)`` are
taken in log space so that large ``d`` does not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as sc
from scipy import integrate
from scipy.special import gammaln

from .errors import DomainError, UnsupportedError

__all__ = [
    "DEFAULT_LAMBDA",
    "PhysicalConstants",
    "PhysicalScales",
    "UncertaintyBounds",
    "SmearingParameters",
    "unit_ball_volume",
    "planck_scales",
    "desitter_scales",
    "smearing_widths",
    "beta_scale",
    "beta_scale_from_densities",
    "dark_energy_density",
    "planck_density",
    "optimal_scales",
    "vacuum_integral",
    "vacuum_density_estimate",
    "horizon_mass",
    "finite_universe_bounds",
    "derive_scales",
]

#: Cosmological constant in cm^-2 used when none is given.
DEFAULT_LAMBDA = 1.1e-56

HBAR_CGS = sc.hbar * 1e7  # erg s
C_CGS = sc.c * 1e2  # cm / s
G_CGS = sc.G * 1e3  # cm^3 g^-1 s^-2
EV_IN_GRAMS = sc.e / sc.c**2 * 1e3


@dataclass(frozen=True)
class PhysicalConstants:
    """The inputs ``(hbar, c, G_D, Lambda_D, d)`` from which all scales follow."""

    hbar: float
    c: float
    G: float
    Lambda: float
    d: int = 3

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"spatial dimension must be an integer >= 1, got {self.d}")
        for name in ("hbar", "c", "G"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be finite and positive, got {val}")
        if not math.isfinite(self.Lambda):
            raise DomainError("Lambda must be finite")

    @classmethod
    def cgs(cls, Lambda: float = DEFAULT_LAMBDA, d: int = 3) -> "PhysicalConstants":
        """Measured values of hbar, c and G in cgs with a chosen Lambda."""
        return cls(HBAR_CGS, C_CGS, G_CGS, Lambda, d)

    @classmethod
    def natural(cls, Lambda: float = 3.0, d: int = 3) -> "PhysicalConstants":
        return cls(1.0, 1.0, 1.0, Lambda, d)


@dataclass(frozen=True)
class UncertaintyBounds:
    """Closed interval bounds on the generalized position and momentum spreads."""

    x_lo: float
    x_hi: float
    p_lo: float
    p_hi: float

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise DomainError(f"empty position window [{self.x_lo}, {self.x_hi}]")
        if not self.p_lo < self.p_hi:
            raise DomainError(f"empty momentum window [{self.p_lo}, {self.p_hi}]")


@dataclass(frozen=True)
class PhysicalScales:
    l_Pl: float
    m_Pl: float
    l_dS: float
    m_dS: float
    sigma_g: float
    sigma_g_tilde: float
    beta: float
    rho_Lambda: float
    rho_Pl: float
    m_max: float
    d: int
    hbar: float
    c: float
    l_Lambda: float | None = None
    m_Lambda: float | None = None


@dataclass(frozen=True)
class SmearingParameters:
    """Dimensionless simulation parameters ``(hbar, beta, sigma_g)``.

    Real-world ``beta / hbar`` is about 1e-61, far below double precision, so
    simulations pick exaggerated values here instead of deriving them.
    """

    hbar: float = 1.0
    beta: float = 0.1
    sigma_g: float = 0.5

    def __post_init__(self):
        for name in ("hbar", "beta", "sigma_g"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be finite and positive, got {val}")

    @property
    def sigma_g_tilde(self) -> float:
        return self.beta / (2.0 * self.sigma_g)

    @classmethod
    def from_widths(cls, sigma_g: float, sigma_g_tilde: float, hbar: float = 1.0):
        return cls(hbar=hbar, beta=2.0 * sigma_g * sigma_g_tilde, sigma_g=sigma_g)


def unit_ball_volume(d: int) -> float:
    """Volume of the unit ball in ``d`` dimensions, ``pi^(d/2) / Gamma(d/2 + 1)``."""
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1.0))


def planck_scales(consts: PhysicalConstants) -> tuple[float, float]:
    """``l_Pl = (hbar G / c^3)^(1/(d-1))`` and ``m_Pl = (hbar^(d-2) c^(4-d) / G)^(1/(d-1))``."""
    d = consts.d
    if d == 1:
        raise DomainError("Planck scales are undefined for d = 1 (exponent 1/(d-1))")
    lh, lc, lg = math.log(consts.hbar), math.log(consts.c), math.log(consts.G)
    l_pl = math.exp((lh + lg - 3.0 * lc) / (d - 1))
    m_pl = math.exp(((d - 2) * lh + (4 - d) * lc - lg) / (d - 1))
    return l_pl, m_pl


def desitter_scales(consts: PhysicalConstants) -> tuple[float, float]:
    """``l_dS = sqrt(d / Lambda)`` and ``m_dS = (hbar / c) sqrt(Lambda / d)``."""
    if not consts.Lambda > 0:
        raise DomainError("de Sitter scales need Lambda > 0 (flat and anti-de Sitter are excluded)")
    ratio = consts.Lambda / consts.d
    return 1.0 / math.sqrt(ratio), consts.hbar / consts.c * math.sqrt(ratio)


def smearing_widths(consts: PhysicalConstants) -> tuple[float, float]:
    """Position width ``2^(1/(d-1)) l_Pl`` and momentum width ``m_dS c / 2``."""
    l_pl, _ = planck_scales(consts)
    _, m_ds = desitter_scales(consts)
    return 2.0 ** (1.0 / (consts.d - 1)) * l_pl, 0.5 * m_ds * consts.c


def beta_scale(consts: PhysicalConstants) -> float:
    sigma_g, sigma_g_tilde = smearing_widths(consts)
    return 2.0 * sigma_g * sigma_g_tilde


def dark_energy_density(consts: PhysicalConstants) -> float:
    """``rho_Lambda = Lambda c^2 / (2 d Omega_d G)``; ``Lambda c^2 / (8 pi G)`` when d = 3."""
    d = consts.d
    return consts.Lambda * consts.c**2 / (2.0 * d * unit_ball_volume(d) * consts.G)


def planck_density(consts: PhysicalConstants) -> float:
    """``rho_Pl = m_Pl / (Omega_d l_Pl^d)``."""
    l_pl, m_pl = planck_scales(consts)
    d = consts.d
    log_rho = math.log(m_pl) - math.log(unit_ball_volume(d)) - d * math.log(l_pl)
    return math.exp(log_rho)


def beta_scale_from_densities(consts: PhysicalConstants) -> float:
    """``beta = 2^((d+1)/(2(d-1))) hbar sqrt(rho_Lambda / rho_Pl)``.

    Algebraically identical to :func:`beta_scale`; kept separate as a cross-check.
    """
    d = consts.d
    if d == 1:
        raise DomainError("density route is undefined for d = 1")
    ratio = dark_energy_density(consts) / planck_density(consts)
    return 2.0 ** ((d + 1) / (2.0 * (d - 1))) * consts.hbar * math.sqrt(ratio)


def _geometric_scales(l_pl, l_ds, m_pl, m_ds):
    return 2.0**0.25 * math.sqrt(l_pl * l_ds), 2.0**-0.25 * math.sqrt(m_pl * m_ds)


def derive_scales(consts: PhysicalConstants) -> PhysicalScales:
    """Evaluate every derived scale at once.

    ``l_Lambda`` and ``m_Lambda`` are filled in only for d = 3, where they are
    defined.
    """
    l_pl, m_pl = planck_scales(consts)
    l_ds, m_ds = desitter_scales(consts)
    sigma_g, sigma_g_tilde = smearing_widths(consts)
    l_lam = m_lam = None
    if consts.d == 3:
        l_lam, m_lam = _geometric_scales(l_pl, l_ds, m_pl, m_ds)
    return PhysicalScales(
        l_Pl=l_pl,
        m_Pl=m_pl,
        l_dS=l_ds,
        m_dS=m_ds,
        sigma_g=sigma_g,
        sigma_g_tilde=sigma_g_tilde,
        beta=2.0 * sigma_g * sigma_g_tilde,
        rho_Lambda=dark_energy_density(consts),
        rho_Pl=planck_density(consts),
        m_max=2.0 ** (-1.0 / (consts.d - 1)) * m_pl,
        d=consts.d,
        hbar=consts.hbar,
        c=consts.c,
        l_Lambda=l_lam,
        m_Lambda=m_lam,
    )


def optimal_scales(scales: PhysicalScales) -> tuple[float, float]:
    """``l_Lambda = 2^(1/4) sqrt(l_Pl l_dS)`` and ``m_Lambda = 2^(-1/4) sqrt(m_Pl m_dS)``."""
    if scales.d != 3:
        raise UnsupportedError(f"optimal scales are defined for d = 3 only, got d = {scales.d}")
    return _geometric_scales(scales.l_Pl, scales.l_dS, scales.m_Pl, scales.m_dS)


def vacuum_integral(k_min: float, k_max: float, k_mass: float, hbar: float, c: float) -> float:
    """``(hbar / c) Int sqrt(k^2 + k_mass^2) d^3k / (2 pi)^3`` over the shell ``[k_min, k_max]``.

    The integral is done in the variable ``t = k / k_max`` so that ranges
    spanning thirty decades stay well conditioned.
    """
    if k_min < 0 or k_max < k_min:
        raise DomainError(f"invalid wavenumber range [{k_min}, {k_max}]")
    if k_max == k_min:
        return 0.0
    mu = k_mass / k_max
    val, _ = integrate.quad(
        lambda t: t * t * math.sqrt(t * t + mu * mu), k_min / k_max, 1.0, epsabs=0.0, epsrel=1e-12
    )
    return hbar / c * 4.0 * math.pi * k_max**4 * val / (2.0 * math.pi) ** 3


def vacuum_density_estimate(scales: PhysicalScales) -> float:
    """Vacuum density with modes cut off between ``2 pi / l_dS`` and ``2 pi / l_Lambda``."""
    if scales.d != 3:
        raise UnsupportedError("the vacuum estimate is defined for d = 3 only")
    l_lam, _ = optimal_scales(scales)
    if l_lam >= scales.l_dS:
        raise DomainError("empty integration range: l_Lambda >= l_dS")
    k_max = 2.0 * math.pi / l_lam
    return vacuum_integral(2.0 * math.pi / scales.l_dS, k_max, k_max, scales.hbar, scales.c)


def horizon_mass(l_H: float, consts: PhysicalConstants) -> tuple[float, float]:
    """Horizon mass ``hbar / (l_H c)`` and the optimal momentum spread ``sqrt(m_Pl m_H) c``."""
    if not l_H > 0:
        raise DomainError("horizon length must be positive")
    m_h = consts.hbar / (l_H * consts.c)
    _, m_pl = planck_scales(consts)
    return m_h, math.sqrt(m_pl * m_h) * consts.c


def finite_universe_bounds(scales: PhysicalScales) -> UncertaintyBounds:
    """Lower and upper limits on the smeared position and momentum spreads."""
    if scales.d != 3:
        raise UnsupportedError("finite-universe bounds are defined for d = 3 only")
    c = scales.c
    return UncertaintyBounds(
        x_lo=2.0 * scales.l_Pl,
        x_hi=float(np.hypot(scales.l_dS, math.sqrt(2.0) * scales.l_Pl)),
        p_lo=scales.m_dS * c / math.sqrt(2.0),
        p_hi=0.5 * math.sqrt(0.5 * scales.m_Pl**2 + scales.m_dS**2) * c,
    )
