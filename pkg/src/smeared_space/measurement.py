"""Generalized Born rule, generalized moments, collapse and sequential measurement.

The observed coordinates are ``x' = u + v`` and ``p' = p + w``.  Position
densities are exact marginals over lattice anti-diagonals because the ``u``
and ``v`` lattices share one spacing.  Momentum densities need ``p + w`` on a
common lattice although ``p`` and ``w`` have different spacings, so the
``v``-axis transform is evaluated off-lattice by direct summation.

Moments and variances are computed on the joint lattice, which is exact for
the discretized state and far cheaper than building a density first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Literal

import numpy as np

from .errors import AccuracyWarning, DomainError, ImpossibleOutcomeError, UnsupportedError
from .grid import Field, Grid, inverse_transform_axis, transform_axis
from .smearing import SmearedState, SmearingKernel, momentum_representation, smear

__all__ = [
    "Axis",
    "OutcomeHistory",
    "position_grid",
    "position_density",
    "momentum_grid",
    "momentum_density",
    "generalized_moment",
    "generalized_variance",
    "canonical_variance",
    "collapse_position",
    "collapse_momentum",
    "sequential_collapse",
    "sample_from_density",
    "sample_outcome",
    "smeared_operator_moment",
    "sequential_measure",
]

Axis = Literal["position", "momentum"]

#: Outcomes with density below this fraction of the peak are rejected.
ZERO_DENSITY_FLOOR = 1e-12


def _check_axis(axis: str) -> None:
    if axis not in ("position", "momentum"):
        raise DomainError(f"axis must be 'position' or 'momentum', got {axis!r}")


@dataclass(frozen=True)
class OutcomeHistory:
    """Ordered record of measurement outcomes as ``(axis, value)`` pairs."""

    outcomes: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        cleaned = []
        for axis, value in self.outcomes:
            _check_axis(axis)
            cleaned.append((axis, float(value)))
        object.__setattr__(self, "outcomes", tuple(cleaned))

    @classmethod
    def positions(cls, *values: float) -> "OutcomeHistory":
        return cls(tuple(("position", v) for v in values))

    def append(self, axis: Axis, value: float) -> "OutcomeHistory":
        return OutcomeHistory(self.outcomes + ((axis, value),))

    def __len__(self) -> int:
        return len(self.outcomes)

    def __iter__(self):
        return iter(self.outcomes)


def position_grid(state: SmearedState) -> Grid:
    """Lattice of ``x' = u_i + v_k``, with ``n_u + n_v - 1`` points."""
    d = state.u_grid.spacing
    n = state.u_grid.n + state.v_grid.n - 1
    start = state.u_grid.start + state.v_grid.start
    return Grid(n, n * d, start + 0.5 * n * d)


def position_density(state: SmearedState) -> Field:
    """``dP/dx'`` as the anti-diagonal marginal of ``|Psi|^2`` over ``u``."""
    nu, nv = state.amplitudes.shape
    idx = (np.arange(nu)[:, None] + np.arange(nv)[None, :]).ravel()
    rho = np.bincount(idx, weights=(np.abs(state.amplitudes) ** 2).ravel(), minlength=nu + nv - 1)
    return Field(position_grid(state), rho * state.u_grid.spacing)


#: Spectral rows and columns below this fraction of the peak are skipped.
SPECTRAL_FLOOR = 1e-22
#: Samples per standard deviation of the narrowest momentum feature.
SAMPLES_PER_STD = 1.5


@dataclass(frozen=True)
class _MomentumPlan:
    """Fine ``p`` quadrature lattice and ``p'`` lattice for one state."""

    p: np.ndarray  # fine p lattice restricted to occupied rows
    B: np.ndarray  # Psi^(p, v) exp(i p v / beta) on those rows
    step: float  # spacing of both the fine p lattice and the p' lattice
    grid: Grid  # lattice of p'


def _spread(points: np.ndarray, weight: np.ndarray) -> float:
    total = weight.sum()
    mean = np.sum(points * weight) / total
    return float(np.sqrt(max(np.sum((points - mean) ** 2 * weight) / total, 0.0)))


def _occupied(weight: np.ndarray) -> np.ndarray:
    idx = np.nonzero(weight > SPECTRAL_FLOOR * weight.max())[0]
    return np.arange(idx[0], idx[-1] + 1)


def _momentum_plan(state: SmearedState) -> _MomentumPlan:
    """Prepare the quadrature behind the ``p'`` density.

    ``p' = p + w`` mixes two lattices of different spacing, so the integral
    over ``p`` at fixed ``p'`` is done on a ``p`` lattice refined by
    zero-padding ``u`` (exact trigonometric interpolation for a state that
    vanishes at the box edge) until the narrower of the two momentum
    features is sampled at least ``SAMPLES_PER_STD`` times per standard
    deviation.  Rows and ``p'`` values with negligible weight are skipped.
    """
    mom = momentum_representation(state)
    weight = np.abs(mom.values) ** 2
    cu, cv = mom.grid0, mom.grid1
    p_marg, w_marg = weight.sum(axis=1), weight.sum(axis=0)
    narrow = min(_spread(cu.points, p_marg), _spread(cv.points, w_marg))
    factor = 1
    if narrow > 0:
        while cu.spacing / factor > narrow / SAMPLES_PER_STD and factor < 64:
            factor *= 2
    ug = state.u_grid
    if factor > 1:
        pad = (factor - 1) * ug.n // 2
        padded = np.zeros((ug.n * factor, state.v_grid.n), dtype=complex)
        padded[pad : pad + ug.n] = state.amplitudes
        fine_grid = Grid(ug.n * factor, ug.extent * factor, ug.center)
    else:
        padded, fine_grid = state.amplitudes, ug
    hat, cf = transform_axis(padded, fine_grid, state.hbar, axis=0)
    rows = _occupied(np.sum(np.abs(hat) ** 2, axis=1))
    p = cf.points[rows]
    B = hat[rows] * np.exp(1j * np.outer(p, state.v_grid.points) / state.beta)
    wcols = _occupied(w_marg)
    step = cf.spacing
    lo = p[0] + cv.points[wcols[0]]
    hi = p[-1] + cv.points[wcols[-1]]
    n = max(int(np.ceil((hi - lo) / step)) + 1, 8)
    return _MomentumPlan(p, B, step, Grid(n, n * step, lo + 0.5 * n * step))


def _uv_partial(state: SmearedState) -> np.ndarray:
    """``B(p, v) = Psi^(p, v) exp(i p v / beta)`` on the plain ``p`` lattice."""
    hat, cu = transform_axis(state.amplitudes, state.u_grid, state.hbar, axis=0)
    return hat * np.exp(1j * np.outer(cu.points, state.v_grid.points) / state.beta)


def momentum_grid(state: SmearedState) -> Grid:
    """Lattice of ``p'`` values on which :func:`momentum_density` is sampled."""
    return _momentum_plan(state).grid


def _amplitude_along(state: SmearedState, plan: _MomentumPlan, p_prime: np.ndarray):
    """``Psi~(p_i, p'_j - p_i)`` for the plan's ``p_i`` and requested ``p'_j``.

    Entries whose ``w = p' - p`` falls outside the ``w`` band are set to zero
    because the direct sum over ``v`` is periodic in ``w`` beyond that band.
    """
    v = state.v_grid.points
    E = np.exp(-1j * np.outer(v, p_prime) / state.beta)
    C = (plan.B @ E) * (state.v_grid.spacing / np.sqrt(2.0 * np.pi * state.beta))
    cv = state.v_grid.conjugate(state.beta)
    half = 0.5 * cv.spacing
    w = p_prime[None, :] - plan.p[:, None]
    C[(w < cv.points[0] - half) | (w > cv.points[-1] + half)] = 0.0
    return C


def momentum_density(state: SmearedState) -> Field:
    """``dP/dp'`` as the marginal of ``|Psi~(p, p' - p)|^2`` over ``p``."""
    plan = _momentum_plan(state)
    C = _amplitude_along(state, plan, plan.grid.points)
    rho = np.sum(np.abs(C) ** 2, axis=0) * plan.step
    return Field(plan.grid, rho)


def generalized_moment(state: SmearedState, axis: Axis, n: int) -> float:
    """``<Psi| X^n |Psi>`` or ``<Psi| P^n |Psi>`` evaluated on the joint lattice."""
    _check_axis(axis)
    if axis == "position":
        weight = np.abs(state.amplitudes) ** 2
        coord = state.xprime_points()
        cell = state.cell
    else:
        mom = momentum_representation(state)
        weight = np.abs(mom.values) ** 2
        coord = mom.grid0.points[:, None] + mom.grid1.points[None, :]
        cell = mom.cell
    return float(np.sum(coord**n * weight) * cell)


def generalized_variance(state: SmearedState, axis: Axis) -> float:
    """``(Delta_Psi X)^2`` or ``(Delta_Psi P)^2``."""
    m1 = generalized_moment(state, axis, 1)
    m2 = generalized_moment(state, axis, 2)
    return m2 - m1 * m1


def canonical_variance(psi: Field, hbar: float = 1.0, axis: Axis = "position") -> float:
    """Variance of ``|psi|^2`` in ``x`` or of ``|psi~_hbar|^2`` in ``p``."""
    _check_axis(axis)
    if axis == "position":
        pts, rho, step = psi.grid.points, np.abs(psi.values) ** 2, psi.grid.spacing
    else:
        spec, cu = transform_axis(psi.values, psi.grid, hbar)
        pts, rho, step = cu.points, np.abs(spec) ** 2, cu.spacing
    total = np.sum(rho) * step
    mean = np.sum(pts * rho) * step / total
    return float(np.sum((pts - mean) ** 2 * rho) * step / total)


def _reject_if_impossible(rho: np.ndarray, j: int, value: float) -> None:
    if rho[j] < ZERO_DENSITY_FLOOR * np.max(rho):
        raise ImpossibleOutcomeError(f"outcome {value:g} has zero probability density")


def _resmear(state: SmearedState, phi: np.ndarray) -> SmearedState:
    nrm = np.sqrt(np.sum(np.abs(phi) ** 2) * state.u_grid.spacing)
    psi = Field(state.u_grid, phi / nrm)
    return smear(psi, state.kernel, state.hbar)


def collapse_position(state: SmearedState, r: float) -> SmearedState:
    """Post-measurement state after observing ``x' = r``.

    The unprimed factor becomes ``Psi(u, r - u)``, which for a fresh state is
    ``g(r - u) psi(u)``; it is normalized and smeared again with the same kernel.
    ``r`` is snapped to the nearest point of the ``x'`` lattice.
    """
    rho = position_density(state)
    m = rho.grid.index_of(r)
    _reject_if_impossible(rho.values, m, r)
    nu, nv = state.amplitudes.shape
    i = np.arange(nu)
    k = m - i
    ok = (k >= 0) & (k < nv)
    phi = np.zeros(nu, dtype=complex)
    phi[ok] = state.amplitudes[i[ok], k[ok]]
    return _resmear(state, phi)


def collapse_momentum(state: SmearedState, s: float) -> SmearedState:
    """Post-measurement state after observing ``p' = s``.

    The momentum amplitude becomes ``Psi~(p, s - p)``, i.e. ``g~(s - p) psi~(p)``
    for a fresh state; it is transformed back, normalized and smeared again.
    ``s`` is snapped to the :func:`momentum_grid` lattice.  A sharp momentum
    outcome spreads the state in position; if it no longer fits the ``u``
    box an :class:`AccuracyWarning` is raised.
    """
    plan = _momentum_plan(state)
    j = plan.grid.index_of(s)
    C = _amplitude_along(state, plan, plan.grid.points)
    rho = np.sum(np.abs(C) ** 2, axis=0)
    _reject_if_impossible(rho, j, s)
    s_snap = plan.grid.points[j : j + 1]
    cu = state.u_grid.conjugate(state.hbar)
    coarse = _MomentumPlan(cu.points, _uv_partial(state), plan.step, plan.grid)
    phi = inverse_transform_axis(_amplitude_along(state, coarse, s_snap)[:, 0], cu)
    edge = max(state.u_grid.n // 32, 1)
    tail = np.sum(np.abs(phi[:edge]) ** 2) + np.sum(np.abs(phi[-edge:]) ** 2)
    if tail > 1e-9 * np.sum(np.abs(phi) ** 2):
        warnings.warn(
            "post-measurement state reaches the edge of the u lattice; enlarge its extent",
            AccuracyWarning,
            stacklevel=2,
        )
    return _resmear(state, phi)


def sequential_collapse(state: SmearedState, history: OutcomeHistory) -> SmearedState:
    """Apply the collapses in ``history`` one after another in the state picture."""
    for axis, value in history:
        if axis == "position":
            state = collapse_position(state, value)
        else:
            state = collapse_momentum(state, value)
    return state


def sample_from_density(density: Field, seed: int | None = None, size: int | None = None):
    """Draw lattice points with probability ``rho_j dx``."""
    rho = np.clip(np.asarray(density.values, dtype=float), 0.0, None)
    total = rho.sum()
    if not total > 0:
        raise DomainError("density has no mass")
    rng = np.random.default_rng(seed)
    return rng.choice(density.grid.points, size=size, p=rho / total)


def sample_outcome(state: SmearedState, axis: Axis, seed: int | None = None, size=None):
    """Sample measurement outcomes from the generalized Born densities."""
    _check_axis(axis)
    rho = position_density(state) if axis == "position" else momentum_density(state)
    return sample_from_density(rho, seed, size)


def _raw_moments(points: np.ndarray, density: np.ndarray, step: float, n: int) -> list[float]:
    return [float(np.sum(points**j * density) * step) for j in range(n + 1)]


def smeared_operator_moment(
    psi: Field, kernel: SmearingKernel, axis: Axis, n: int, hbar: float = 1.0
) -> float:
    """``<psi| S^dagger X^n S |psi>`` in the operator picture.

    Each unprimed point ``x`` contributes the kernel average
    ``<(x + v)^n>_g``, expanded binomially; the result is weighted by
    ``|psi(x)|^2``.  The momentum axis uses ``p`` and ``w`` instead.
    """
    _check_axis(axis)
    if n < 0:
        raise DomainError("moment order must be nonnegative")
    if axis == "position":
        pts, rho, step = psi.grid.points, np.abs(psi.values) ** 2, psi.grid.spacing
        kg = kernel.grid
        g_mom = _raw_moments(kg.points, kernel.density(), kg.spacing, n)
    else:
        spec, cu = transform_axis(psi.values, psi.grid, hbar)
        pts, rho, step = cu.points, np.abs(spec) ** 2, cu.spacing
        conj = kernel.conjugate()
        g_mom = _raw_moments(conj.grid.points, np.abs(conj.values) ** 2, conj.grid.spacing, n)
    local = sum(comb(n, j) * pts ** (n - j) * g_mom[j] for j in range(n + 1))
    return float(np.sum(local * rho) * step)


def sequential_measure(
    psi: Field, kernel: SmearingKernel, outcomes: OutcomeHistory, hbar: float = 1.0
) -> SmearedState:
    """Operator-picture chain ``S M_{r_n} S ... M_{r_1} S`` acting on ``psi``.

    Between smearings each position outcome multiplies the canonical
    amplitude by ``g(r - x)``.  Normalizing after each step only rescales
    the amplitude, so the result equals normalizing once at the end.
    Outcomes are snapped to the ``x'`` lattice as in :func:`collapse_position`.
    """
    phi = np.asarray(psi.values, dtype=complex)
    start = smear(psi, kernel, hbar)
    xgrid = position_grid(start)
    g = kernel.values
    nu, nv = phi.size, g.size
    i = np.arange(nu)
    state = start
    for axis, r in outcomes:
        if axis != "position":
            raise UnsupportedError(
                "the operator-picture chain is defined for position outcomes only; "
                "use sequential_collapse for momentum outcomes"
            )
        m = xgrid.index_of(r)
        rho = position_density(state)
        _reject_if_impossible(rho.values, m, r)
        k = m - i
        ok = (k >= 0) & (k < nv)
        factor = np.zeros(nu, dtype=complex)
        factor[ok] = g[k[ok]]
        phi = factor * phi
        nrm = np.sqrt(np.sum(np.abs(phi) ** 2) * psi.grid.spacing)
        state = smear(Field(psi.grid, phi / nrm), kernel, hbar)
    return state
