"""Finite-resolution measurements on a canonical state in a fixed background.

The measurement operators ``E_x = Int g(x' - x) |x'><x'| dx'`` are never
built as matrices.  They act on lattice densities as a convolution, so a
position outcome distribution is ``|g|^2`` convolved with ``|psi|^2`` and
its moments add.  Outcomes are read as ``x + offset`` with the offset drawn
from ``|g|^2``, the same reading as ``x' = x + v`` in the smeared model.  Only statistics are produced; no
post-measurement state is defined here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError, GridError
from .grid import Field, Grid, gaussian_amplitude, transform_axis
from .measurement import generalized_variance
from .smearing import (
    SmearingConstraint,
    SmearingKernel,
    check_smearing_pair,
    make_kernel,
    smear,
    spacings_match,
)

__all__ = [
    "ResolutionKernel",
    "PovmStatistics",
    "IndependenceReport",
    "resolution_kernel",
    "from_smearing_kernel",
    "povm_completeness",
    "povm_outcome_density",
    "povm_statistics",
    "povm_variance",
    "povm_independence_demo",
]

NORM_TOL = 1e-9


def _moments(points: np.ndarray, density: np.ndarray, step: float) -> tuple[float, float, float]:
    m0 = float(np.sum(density) * step)
    m1 = float(np.sum(points * density) * step)
    m2 = float(np.sum(points**2 * density) * step)
    return m0, m1, m2


@dataclass(frozen=True)
class ResolutionKernel:
    """Resolution density ``|g|^2`` over an offset lattice."""

    density: Field
    sigma: float

    def __post_init__(self):
        vals = np.asarray(self.density.values)
        if np.iscomplexobj(vals) or np.any(vals < 0):
            raise DomainError("resolution density must be real and nonnegative")
        total = float(np.sum(vals) * self.density.grid.spacing)
        if abs(total - 1.0) > NORM_TOL:
            raise DomainError(f"resolution density integrates to {total:.12g}, not 1")

    @property
    def grid(self):
        return self.density.grid

    @property
    def mean(self) -> float:
        return _moments(self.grid.points, self.density.values, self.grid.spacing)[1]

    @property
    def variance(self) -> float:
        _, m1, m2 = _moments(self.grid.points, self.density.values, self.grid.spacing)
        return m2 - m1 * m1

    @property
    def centered(self) -> bool:
        return abs(self.mean) <= 1e-12 * max(self.sigma, self.grid.spacing)


def resolution_kernel(
    kind: Literal["gaussian", "exponential", "delta"], sigma: float, grid: Grid
) -> ResolutionKernel:
    """Resolution density of standard deviation ``sigma`` on an offset lattice.

    ``delta`` puts all weight on the lattice point nearest zero and models a
    projective measurement; ``sigma`` is then ignored.
    """
    if kind == "delta":
        vals = np.zeros(grid.n)
        vals[grid.index_of(0.0)] = 1.0 / grid.spacing
        return ResolutionKernel(Field(grid, vals), 0.0)
    amp = make_kernel(kind, sigma, 1.0, grid)
    return ResolutionKernel(Field(grid, amp.density()), float(sigma))


def from_smearing_kernel(kernel: SmearingKernel, axis: Literal["position", "momentum"]):
    """Resolution density of a smearing kernel, or of its scale-``beta`` conjugate."""
    if axis == "position":
        return ResolutionKernel(Field(kernel.grid, kernel.density()), kernel.sigma_g)
    if axis == "momentum":
        conj = kernel.conjugate()
        dens = np.abs(conj.values) ** 2
        dens = dens / (np.sum(dens) * conj.grid.spacing)
        return ResolutionKernel(Field(conj.grid, dens), kernel.sigma_g_tilde)
    raise DomainError(f"axis must be 'position' or 'momentum', got {axis!r}")


def _outcome_grid(grid: Grid, kernel: ResolutionKernel) -> Grid:
    """Every outcome ``x + offset`` reachable from the state and kernel lattices."""
    n = grid.n + kernel.grid.n - 1
    start = grid.start + kernel.grid.start
    return Grid(n, n * grid.spacing, start + 0.5 * n * grid.spacing)


def povm_completeness(kernel: ResolutionKernel, grid=None) -> float:
    """Sup-norm deviation of ``sum_x E_x^dagger E_x dx`` from the identity on ``grid``.

    The elements are diagonal in their own basis, so the sum is evaluated as
    the diagonal ``sum_m |g(x'_i - x_m)|^2 dx`` over the full outcome
    lattice.  ``grid`` defaults to the kernel's own lattice and may be a
    position or a momentum lattice of the same spacing.
    """
    grid = kernel.grid if grid is None else grid
    if not np.isclose(grid.spacing, kernel.grid.spacing, rtol=1e-9, atol=0.0):
        raise GridError("kernel and state lattices must share one spacing")
    outcomes = np.ones(grid.n + kernel.grid.n - 1)
    # for each lattice point the outcomes run over every kernel offset exactly once
    diag = np.convolve(outcomes, kernel.density.values, mode="valid") * grid.spacing
    return float(np.max(np.abs(diag - 1.0)))


def povm_outcome_density(psi: Field, kernel: ResolutionKernel) -> Field:
    """Position outcome density ``P(x) = Int |g(x - x')|^2 |psi(x')|^2 dx'``."""
    if not isinstance(kernel.grid, Grid) or not spacings_match(psi.grid, kernel.grid):
        raise GridError("kernel and state lattices must share one spacing")
    rho = np.abs(psi.values) ** 2
    out = np.convolve(rho, kernel.density.values) * psi.grid.spacing
    return Field(_outcome_grid(psi.grid, kernel), out)


@dataclass(frozen=True)
class PovmStatistics:
    mean: float
    variance: float
    kernel_mean: float
    centered: bool


def povm_statistics(
    psi: Field,
    kernel: ResolutionKernel,
    axis: Literal["position", "momentum"] = "position",
    hbar: float = 1.0,
) -> PovmStatistics:
    """Mean and variance of the finite-resolution outcome distribution.

    The outcome is the canonical value plus an independent kernel offset, so
    means and variances add.  The kernel mean is also reported on its own,
    since it only shifts the outcome mean.  For momentum the canonical density is
    ``|psi~_hbar|^2`` on the ``p`` lattice.
    """
    norm = psi.norm()
    if abs(norm - 1.0) > 1e-6:
        raise DomainError(f"psi must be normalized, has norm {norm:.9g}")
    if axis == "position":
        pts, rho, step = psi.grid.points, np.abs(psi.values) ** 2, psi.grid.spacing
    elif axis == "momentum":
        spec, cu = transform_axis(psi.values, psi.grid, hbar)
        pts, rho, step = cu.points, np.abs(spec) ** 2, cu.spacing
    else:
        raise DomainError(f"axis must be 'position' or 'momentum', got {axis!r}")
    m0, m1, m2 = _moments(pts, rho, step)
    var_psi = m2 / m0 - (m1 / m0) ** 2
    kmean = kernel.mean
    return PovmStatistics(m1 / m0 + kmean, var_psi + kernel.variance, kmean, kernel.centered)


def povm_variance(psi: Field, kernel: ResolutionKernel, axis="position", hbar: float = 1.0) -> float:
    """``(Delta_psi E)^2 = (Delta_psi x)^2 + sigma^2`` (or the momentum analogue)."""
    return povm_statistics(psi, kernel, axis, hbar).variance


@dataclass(frozen=True)
class IndependenceReport:
    """POVM mode versus smeared mode for one pair of resolution widths."""

    sigma_x: float
    sigma_p: float
    product: float
    beta: float
    povm_completeness_x: float
    povm_completeness_p: float
    povm_accepts: bool
    smeared_check: SmearingConstraint
    povm_variances: tuple[float, float]
    smeared_variances: tuple[float, float] | None

    @property
    def smeared_accepts(self) -> bool:
        return self.smeared_check.admissible

    @property
    def variance_gap(self) -> float | None:
        if self.smeared_variances is None:
            return None
        return max(abs(a - b) for a, b in zip(self.povm_variances, self.smeared_variances))


def povm_independence_demo(
    kernel_x: ResolutionKernel,
    kernel_p: ResolutionKernel,
    beta: float,
    psi: Field | None = None,
    hbar: float = 1.0,
) -> IndependenceReport:
    """Contrast the unconstrained POVM widths with the smeared model's ``2 sigma sigma~ = beta``.

    The POVM pair is accepted whenever both sets of elements are complete,
    whatever the product of widths.  The same widths are then checked as a
    smearing pair at scale ``beta``.  When they saturate it, the state is
    smeared with the Gaussian kernel of width ``sigma_x`` and both modes'
    variances are reported.
    """
    sx, sp = float(np.sqrt(kernel_x.variance)), float(np.sqrt(kernel_p.variance))
    cx = povm_completeness(kernel_x)
    cp = povm_completeness(kernel_p)
    check = check_smearing_pair(sx, sp, beta)
    if psi is None:
        psi = gaussian_amplitude(kernel_x.grid, 0.0, kernel_x.grid.extent / 16.0)
    pv = (povm_variance(psi, kernel_x, "position", hbar), povm_variance(psi, kernel_p, "momentum", hbar))
    sv = None
    if check.saturated and isinstance(kernel_x.grid, Grid):
        gk = make_kernel("gaussian", sx, beta, kernel_x.grid)
        state = smear(psi, gk, hbar)
        sv = (generalized_variance(state, "position"), generalized_variance(state, "momentum"))
    return IndependenceReport(sx, sp, sx * sp, beta, cx, cp, max(cx, cp) < 1e-6, check, pv, sv)
