"""The unified uncertainty relation and its GUP, EUP and EGUP limits.

Width parameters are read from any object exposing ``hbar``, ``sigma_g`` and
``sigma_g_tilde``, so both :class:`~smeared_space.scales.PhysicalScales` and
:class:`~smeared_space.scales.SmearingParameters` work.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from .dynamics import apply_P, apply_X, expectation, spectral_tail
from .errors import AccuracyWarning, DomainError, ValidityWarning
from .grid import Grid, gaussian_amplitude
from .measurement import generalized_variance
from .smearing import SmearedState, make_kernel, smear

__all__ = [
    "UncertaintyReport",
    "BoundValue",
    "SweepRow",
    "unified_relation",
    "commutator_expectation",
    "optimal_widths",
    "gup_bound",
    "gup_coefficient",
    "eup_coefficient",
    "eup_bound",
    "egup_product_bound",
    "unified_product",
    "symmetry_transform",
    "sweep_products",
    "slack_argmin",
]

#: Small-parameter value above which a first-order expansion is flagged.
EXPANSION_LIMIT = 0.1


class WidthSource(Protocol):
    hbar: float
    sigma_g: float
    sigma_g_tilde: float


@dataclass(frozen=True)
class UncertaintyReport:
    delta_X: float
    delta_P: float
    product: float
    bound: float
    slack: float


class BoundValue(NamedTuple):
    """A first-order bound together with the unexpanded expression it approximates."""

    value: float
    exact: float
    valid: bool


@dataclass(frozen=True)
class SweepRow:
    beta: float
    dx_psi: float
    DX: float
    DP: float
    product: float
    bound: float
    slack: float

    FIELDS = ("beta", "dx_psi", "DX", "DP", "product", "bound", "slack")

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in self.FIELDS)


def unified_relation(state: SmearedState) -> UncertaintyReport:
    """Generalized spreads of ``state`` against the bound ``(hbar + beta) / 2``."""
    dX = math.sqrt(generalized_variance(state, "position"))
    dP = math.sqrt(generalized_variance(state, "momentum"))
    bound = 0.5 * (state.hbar + state.beta)
    return UncertaintyReport(dX, dP, dX * dP, bound, dX * dP - bound)


def commutator_expectation(state: SmearedState) -> complex:
    """``<Psi| X P - P X |Psi>``, expected to equal ``i (hbar + beta)``."""
    if spectral_tail(state.amplitudes) > 1e-6:
        warnings.warn("state is not resolved by the lattice band", AccuracyWarning, stacklevel=2)
    x_psi = state.with_amplitudes(apply_X(state))
    p_psi = state.with_amplitudes(apply_P(state, warn=False))
    return expectation(state, apply_X(p_psi)) - expectation(state, apply_P(x_psi, warn=False))


def optimal_widths(hbar: float, sigma_g: float, sigma_g_tilde: float) -> tuple[float, float]:
    """Canonical spreads that minimize the generalized product.

    ``dx = sqrt(hbar sigma_g / (2 sigma_g_tilde))`` and
    ``dp = sqrt(hbar sigma_g_tilde / (2 sigma_g))``; their product is ``hbar / 2``.
    """
    if min(hbar, sigma_g, sigma_g_tilde) <= 0:
        raise DomainError("hbar and widths must be positive")
    return math.sqrt(0.5 * hbar * sigma_g / sigma_g_tilde), math.sqrt(
        0.5 * hbar * sigma_g_tilde / sigma_g
    )


def gup_coefficient(scales: WidthSource) -> float:
    """Coefficient ``sigma_g^2 / hbar`` of the linear term in :func:`gup_bound`."""
    return scales.sigma_g**2 / scales.hbar


def eup_coefficient(scales: WidthSource) -> float:
    """Coefficient ``sigma_g_tilde^2 / hbar`` of the linear term in :func:`eup_bound`."""
    return scales.sigma_g_tilde**2 / scales.hbar


def gup_bound(dp: float, scales: WidthSource) -> BoundValue:
    """Position bound ``hbar / (2 dp) + (sigma_g^2 / hbar) dp``.

    The unexpanded form is ``hbar / (2 dp) * sqrt(1 + (2 sigma_g dp / hbar)^2)``.
    A :class:`ValidityWarning` is raised when ``dp`` lies below
    ``sigma_g_tilde`` or when ``2 sigma_g dp / hbar`` exceeds ``EXPANSION_LIMIT``.
    """
    if not dp > 0:
        raise DomainError("dp must be positive")
    hbar, s = scales.hbar, scales.sigma_g
    eps = 2.0 * s * dp / hbar
    lead = hbar / (2.0 * dp)
    valid = dp >= scales.sigma_g_tilde and eps <= EXPANSION_LIMIT
    if not valid:
        warnings.warn(f"GUP expansion used outside its window (eps = {eps:.3g})", ValidityWarning, 2)
    return BoundValue(lead + s * s / hbar * dp, lead * math.sqrt(1.0 + eps * eps), valid)


def eup_bound(dx: float, scales: WidthSource) -> BoundValue:
    """Momentum bound ``hbar / (2 dx) + (sigma_g_tilde^2 / hbar) dx``."""
    if not dx > 0:
        raise DomainError("dx must be positive")
    hbar, st = scales.hbar, scales.sigma_g_tilde
    eps = 2.0 * dx * st / hbar
    lead = hbar / (2.0 * dx)
    valid = dx >= scales.sigma_g and eps <= EXPANSION_LIMIT
    if not valid:
        warnings.warn(f"EUP expansion used outside its window (eps = {eps:.3g})", ValidityWarning, 2)
    return BoundValue(lead + st * st / hbar * dx, lead * math.sqrt(1.0 + eps * eps), valid)


def unified_product(dx: float, dp: float, scales: WidthSource) -> float:
    """``sqrt((dx^2 + sigma_g^2)(dp^2 + sigma_g_tilde^2))``."""
    return math.sqrt((dx * dx + scales.sigma_g**2) * (dp * dp + scales.sigma_g_tilde**2))


def egup_product_bound(dx: float, dp: float, scales: WidthSource) -> float:
    """First-order expansion of :func:`unified_product` in both small ratios.

    ``dx dp + (sigma_g^2 / 2) dp / dx + (sigma_g_tilde^2 / 2) dx / dp``.  At
    ``dx dp = hbar / 2`` the two correction terms become the GUP and EUP
    corrections, so the expression reduces to ``dp * gup`` or ``dx * eup``
    when the other width vanishes.
    """
    if min(dx, dp) <= 0:
        raise DomainError("dx and dp must be positive")
    s, st = scales.sigma_g, scales.sigma_g_tilde
    return dx * dp + 0.5 * s * s * dp / dx + 0.5 * st * st * dx / dp


def symmetry_transform(dx: float, dp: float, scales: WidthSource) -> tuple[float, float]:
    """Swap the canonical spreads through the width ratio; the unified product is invariant."""
    r = scales.sigma_g / scales.sigma_g_tilde
    return r * dp, dx / r


def sweep_products(
    beta_list: Sequence[float],
    width_list: Sequence[float],
    grid: Grid,
    hbar: float = 1.0,
    sigma_g: float = 0.5,
    v_grid: Grid | None = None,
) -> list[SweepRow]:
    """Unified-relation rows for Gaussian states over a ``beta`` by width table."""
    v_grid = grid if v_grid is None else v_grid
    rows = []
    for beta in beta_list:
        kernel = make_kernel("gaussian", sigma_g, float(beta), v_grid)
        for width in width_list:
            psi = gaussian_amplitude(grid, 0.0, float(width))
            rep = unified_relation(smear(psi, kernel, hbar))
            rows.append(
                SweepRow(float(beta), float(width), rep.delta_X, rep.delta_P, rep.product, rep.bound, rep.slack)
            )
    return rows


def slack_argmin(rows: Sequence[SweepRow]) -> float:
    """Width at which the slack is smallest."""
    return rows[int(np.argmin([r.slack for r in rows]))].dx_psi
