"""Smearing kernels and the lift from canonical wave functions to smeared states.

A smeared state is stored in the coordinates ``u = x`` and ``v = x' - x`` so
that freshly smeared states are separable, ``Psi(u, v) = g(v) psi(u)``, and
the momentum representation is two axis-aligned transforms: along ``u`` at
scale ``hbar`` (giving ``p``) and along ``v`` at scale ``beta`` (giving
``w = p' - p``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DomainError, GridError, ResolutionError
from .grid import (
    ConjugateGrid,
    Field,
    Field2D,
    Grid,
    inverse_transform_axis,
    transform,
    transform_axis,
)

__all__ = [
    "SmearingKernel",
    "SmearedState",
    "SmearingConstraint",
    "make_kernel",
    "smear",
    "momentum_representation",
    "position_representation",
    "naive_smear_norm",
    "eigenstate_sample",
    "check_smearing_pair",
    "kernel_spreads",
    "spacings_match",
]

KernelKind = Literal["gaussian", "exponential", "custom"]

NORM_TOL = 1e-6


def _std(points: np.ndarray, density: np.ndarray, step: float) -> float:
    total = np.sum(density) * step
    mean = np.sum(points * density) * step / total
    return float(np.sqrt(np.sum((points - mean) ** 2 * density) * step / total))


@dataclass(frozen=True)
class SmearingKernel:
    """Normalized amplitude ``g(v)`` over the ``v = x' - x`` lattice.

    ``sigma_g`` is the nominal width used to build the kernel; the realized
    spreads of ``|g|^2`` and of its conjugate are available from
    :func:`kernel_spreads`.
    """

    kind: str
    sigma_g: float
    beta: float
    grid: Grid
    amplitude: Field

    @property
    def values(self) -> np.ndarray:
        return self.amplitude.values

    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def conjugate(self) -> Field:
        """``g~_beta`` on the conjugate lattice of the ``v`` grid."""
        return transform(self.amplitude, self.beta)

    def conjugate_at(self, w) -> np.ndarray:
        """Evaluate ``g~_beta(w)`` at arbitrary ``w`` by direct summation."""
        w = np.atleast_1d(np.asarray(w, dtype=float))
        v = self.grid.points
        phase = np.exp(-1j * np.outer(w, v) / self.beta)
        return phase @ self.values * (self.grid.spacing / np.sqrt(2.0 * np.pi * self.beta))

    @property
    def sigma_g_tilde(self) -> float:
        """Momentum width ``beta / (2 sigma_g)`` paired with the nominal position width."""
        return self.beta / (2.0 * self.sigma_g)


@dataclass(frozen=True)
class SmearedState:
    """Two-coordinate amplitude ``Psi(u, v)`` with ``u = x`` and ``v = x' - x``."""

    u_grid: Grid
    kernel: SmearingKernel
    amplitudes: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.amplitudes, dtype=complex)
        shape = (self.u_grid.n, self.kernel.grid.n)
        if vals.shape != shape:
            raise GridError(f"amplitudes have shape {vals.shape}, expected {shape}")
        if not np.all(np.isfinite(vals)):
            raise GridError("amplitudes contain non-finite samples")
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")
        if not spacings_match(self.u_grid, self.kernel.grid):
            raise GridError("u and v lattices must share one spacing")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "amplitudes", vals)

    @property
    def v_grid(self) -> Grid:
        return self.kernel.grid

    @property
    def beta(self) -> float:
        return self.kernel.beta

    @property
    def cell(self) -> float:
        return self.u_grid.spacing * self.v_grid.spacing

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.cell))

    def with_amplitudes(self, values: np.ndarray) -> "SmearedState":
        return SmearedState(self.u_grid, self.kernel, values, self.hbar)

    def xprime_points(self) -> np.ndarray:
        """Observed coordinate ``u + v`` on the full 2-D lattice."""
        return self.u_grid.points[:, None] + self.v_grid.points[None, :]


@dataclass(frozen=True)
class SmearingConstraint:
    """Outcome of checking a width pair against the kernel Fourier inequality."""

    sigma_g: float
    sigma_g_tilde: float
    beta: float
    product: float
    admissible: bool
    saturated: bool
    message: str


def spacings_match(a: Grid, b: Grid, rtol: float = 1e-9) -> bool:
    return bool(np.isclose(a.spacing, b.spacing, rtol=rtol, atol=0.0))


def _check_width(sigma_g: float, grid: Grid) -> None:
    if not sigma_g > 0:
        raise DomainError(f"sigma_g must be positive, got {sigma_g}")
    if sigma_g < 3.0 * grid.spacing:
        raise ResolutionError(
            f"sigma_g = {sigma_g:g} is below 3 lattice spacings ({3 * grid.spacing:g})"
        )
    if grid.extent < 12.0 * sigma_g:
        raise DomainError(f"v extent {grid.extent:g} is below 12 sigma_g = {12 * sigma_g:g}")


def make_kernel(
    kind: KernelKind,
    sigma_g: float,
    beta: float,
    v_grid: Grid,
    samples: np.ndarray | None = None,
) -> SmearingKernel:
    """Build a normalized, real, nonnegative kernel amplitude on ``v_grid``.

    ``gaussian`` gives ``|g|^2 = N(0, sigma_g^2)``.  ``exponential`` gives
    ``|g|^2 ~ exp(-|v| / lam)`` with ``lam = sigma_g / sqrt(2)`` so that its
    standard deviation is ``sigma_g``.  ``custom`` takes ``samples`` as the
    amplitude and only normalizes it.
    """
    if not beta > 0:
        raise DomainError(f"beta must be positive, got {beta}")
    _check_width(sigma_g, v_grid)
    v = v_grid.points
    if kind == "gaussian":
        amp = np.exp(-(v**2) / (4.0 * sigma_g**2))
    elif kind == "exponential":
        lam = sigma_g / np.sqrt(2.0)
        amp = np.exp(-np.abs(v) / (2.0 * lam))
    elif kind == "custom":
        if samples is None:
            raise DomainError("custom kernels need explicit samples")
        amp = np.asarray(samples)
        if amp.shape != (v_grid.n,):
            raise GridError(f"custom samples have shape {amp.shape}, expected ({v_grid.n},)")
    else:
        raise DomainError(f"unknown kernel kind {kind!r}")
    nrm = np.sqrt(np.sum(np.abs(amp) ** 2) * v_grid.spacing)
    if not nrm > 0:
        raise DomainError("kernel samples vanish on the lattice")
    return SmearingKernel(kind, float(sigma_g), float(beta), v_grid, Field(v_grid, amp / nrm))


def kernel_spreads(kernel: SmearingKernel) -> tuple[float, float]:
    """Lattice standard deviations of ``|g|^2`` in ``v`` and of ``|g~_beta|^2`` in ``w``."""
    dv = _std(kernel.grid.points, kernel.density(), kernel.grid.spacing)
    conj = kernel.conjugate()
    dw = _std(conj.grid.points, np.abs(conj.values) ** 2, conj.grid.spacing)
    return dv, dw


def smear(psi: Field, kernel: SmearingKernel, hbar: float = 1.0) -> SmearedState:
    """Lift ``psi`` to ``Psi(u, v) = g(v) psi(u)``; the result has unit norm."""
    if not isinstance(psi.grid, Grid):
        raise GridError("psi must live on a position lattice")
    if not spacings_match(psi.grid, kernel.grid):
        raise GridError("psi and kernel lattices must share one spacing")
    nrm = psi.norm()
    if abs(nrm - 1.0) > NORM_TOL:
        raise DomainError(f"psi must be normalized, has norm {nrm:.9g}")
    return SmearedState(psi.grid, kernel, np.outer(psi.values, kernel.values), hbar)


def momentum_representation(state: SmearedState) -> Field2D:
    """``Psi~(p, w)``: transform ``u`` at ``hbar`` and ``v`` at ``beta``."""
    tmp, cu = transform_axis(state.amplitudes, state.u_grid, state.hbar, axis=0)
    out, cv = transform_axis(tmp, state.v_grid, state.beta, axis=1)
    return Field2D(cu, cv, out)


def position_representation(field: Field2D) -> np.ndarray:
    """Inverse of :func:`momentum_representation`, returning ``Psi(u, v)``."""
    if not (isinstance(field.grid0, ConjugateGrid) and isinstance(field.grid1, ConjugateGrid)):
        raise GridError("expected a momentum-space field")
    tmp = inverse_transform_axis(field.values, field.grid1, axis=1)
    return inverse_transform_axis(tmp, field.grid0, axis=0)


def naive_smear_norm(psi: Field, kernel: SmearingKernel) -> float:
    """Squared norm of the convolution ``(g * psi)(x')``.

    This is the naive point-to-distribution map that fails to preserve
    normalization: the value depends on ``psi`` unless ``g`` is delta-like.
    The linear (non-periodic) convolution is used so that no mass wraps.
    """
    if not spacings_match(psi.grid, kernel.grid):
        raise GridError("psi and kernel lattices must share one spacing")
    dx = psi.grid.spacing
    h = np.convolve(psi.values, kernel.values) * dx
    return float(np.sum(np.abs(h) ** 2) * dx)


def eigenstate_sample(
    p: float, p_prime: float, u_grid: Grid, v_grid: Grid, hbar: float, beta: float
) -> Field2D:
    """Plane wave ``exp(i p u / hbar) exp(i (p' - p) v / beta) / (2 pi sqrt(hbar beta))``."""
    u, v = u_grid.points, v_grid.points
    vals = np.exp(1j * p * u / hbar)[:, None] * np.exp(1j * (p_prime - p) * v / beta)[None, :]
    return Field2D(u_grid, v_grid, vals / (2.0 * np.pi * np.sqrt(hbar * beta)))


def check_smearing_pair(sigma_g: float, sigma_g_tilde: float, beta: float) -> SmearingConstraint:
    """Test whether kernel widths ``(sigma_g, sigma_g_tilde)`` can coexist at scale ``beta``.

    The position and momentum spreads of any kernel and its scale-``beta``
    conjugate obey ``dv dw >= beta / 2``, with equality only for Gaussians.
    """
    if min(sigma_g, sigma_g_tilde, beta) <= 0:
        raise DomainError("widths and beta must be positive")
    product = sigma_g * sigma_g_tilde
    half = 0.5 * beta
    tol = 1e-12 * half
    admissible = product >= half - tol
    saturated = abs(product - half) <= tol
    if not admissible:
        msg = f"sigma_g * sigma_g_tilde = {product:.6g} < beta/2 = {half:.6g}: no kernel exists"
    elif saturated:
        msg = "product equals beta/2: realized only by a Gaussian kernel"
    else:
        msg = "product exceeds beta/2: realizable by a non-Gaussian kernel"
    return SmearingConstraint(sigma_g, sigma_g_tilde, beta, product, admissible, saturated, msg)
