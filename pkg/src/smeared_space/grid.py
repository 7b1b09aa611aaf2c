"""Uniform periodic lattices and unitary Fourier transforms at arbitrary scale.

A transform at scale ``s`` approximates the continuous pair

    F(q) = (2 pi s)^(-1/2) Int f(x) exp(-i q x / s) dx,
    f(x) = (2 pi s)^(-1/2) Int F(q) exp(+i q x / s) dq,

so ``s = hbar`` maps wave functions to momentum amplitudes and ``s = beta``
maps smearing kernels to their conjugates.  Nothing here assumes a global
value of ``s``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import AccuracyWarning, GridError

__all__ = [
    "Grid",
    "ConjugateGrid",
    "Field",
    "Field2D",
    "transform",
    "inverse_transform",
    "transform_axis",
    "inverse_transform_axis",
    "convolve",
    "spectral_derivative",
    "spectral_derivative_axis",
    "moment",
    "gaussian_amplitude",
    "normalize",
    "is_power_of_two",
]


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """``n`` samples ``x_j = center - extent/2 + j * spacing`` on a periodic box."""

    n: int
    extent: float
    center: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8:
            raise GridError(f"grid needs an integer n >= 8, got {self.n}")
        if not (np.isfinite(self.extent) and self.extent > 0):
            raise GridError(f"grid extent must be positive, got {self.extent}")

    @property
    def spacing(self) -> float:
        return self.extent / self.n

    @property
    def start(self) -> float:
        return self.center - 0.5 * self.extent

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.start + self.spacing * np.arange(self.n)
        pts.flags.writeable = False
        return pts

    def conjugate(self, scale: float) -> "ConjugateGrid":
        return ConjugateGrid(self, scale)

    def index_of(self, x: float) -> int:
        """Index of the lattice point nearest to ``x`` (clipped to the grid)."""
        j = int(np.rint((x - self.start) / self.spacing))
        return min(max(j, 0), self.n - 1)

    def same_as(self, other: "Grid", rtol: float = 1e-12) -> bool:
        return (
            self.n == other.n
            and np.isclose(self.extent, other.extent, rtol=rtol, atol=0.0)
            and np.isclose(self.center, other.center, rtol=0.0, atol=rtol * self.extent)
        )


@dataclass(frozen=True)
class ConjugateGrid:
    """Spectral lattice ``q_m = 2 pi s m / L`` for ``m`` in ``[-n/2, n/2)``."""

    base: Grid
    scale: float

    def __post_init__(self):
        if not (np.isfinite(self.scale) and self.scale > 0):
            raise GridError(f"transform scale must be positive, got {self.scale}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi * self.scale / self.base.extent

    @property
    def extent(self) -> float:
        return self.n * self.spacing

    @property
    def center(self) -> float:
        return 0.0

    @property
    def start(self) -> float:
        return -(self.n // 2) * self.spacing

    @cached_property
    def points(self) -> np.ndarray:
        pts = self.spacing * np.arange(-(self.n // 2), self.n - self.n // 2)
        pts.flags.writeable = False
        return pts

    def index_of(self, q: float) -> int:
        j = int(np.rint((q - self.start) / self.spacing))
        return min(max(j, 0), self.n - 1)


AnyGrid = Union[Grid, ConjugateGrid]


@dataclass(frozen=True)
class Field:
    """Complex (or real) samples over a lattice."""

    grid: AnyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n,):
            raise GridError(f"field has shape {vals.shape}, grid expects ({self.grid.n},)")
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite samples")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def points(self) -> np.ndarray:
        return self.grid.points

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.spacing))

    def density(self) -> "Field":
        return Field(self.grid, np.abs(self.values) ** 2)

    def integral(self) -> complex:
        return np.sum(self.values) * self.grid.spacing


@dataclass(frozen=True)
class Field2D:
    """Samples over the product of two lattices, axis 0 first."""

    grid0: AnyGrid
    grid1: AnyGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid0.n, self.grid1.n):
            raise GridError(
                f"field has shape {vals.shape}, grids expect ({self.grid0.n}, {self.grid1.n})"
            )
        if not np.all(np.isfinite(vals)):
            raise GridError("field contains non-finite samples")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def cell(self) -> float:
        return self.grid0.spacing * self.grid1.spacing

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.cell))


def _require_fft_size(n: int) -> None:
    if not is_power_of_two(n):
        raise GridError(f"transforms need a power-of-two sample count, got {n}")


def transform_axis(values: np.ndarray, grid: Grid, scale: float, axis: int = -1):
    """Forward transform of ``values`` along ``axis``; returns ``(array, ConjugateGrid)``.

    Output samples are ordered by increasing conjugate coordinate.
    """
    _require_fft_size(grid.n)
    conj = ConjugateGrid(grid, scale)
    spec = np.fft.fftshift(np.fft.fft(values, axis=axis), axes=axis)
    # exp(-i q x0 / s) accounts for the lattice not starting at the origin
    phase = np.exp(-1j * conj.points * grid.start / scale)
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n
    spec = spec * phase.reshape(shape) * (grid.spacing / np.sqrt(2.0 * np.pi * scale))
    return spec, conj


def inverse_transform_axis(values: np.ndarray, conj: ConjugateGrid, axis: int = -1):
    """Inverse of :func:`transform_axis` at the conjugate grid's own scale."""
    grid = conj.base
    _require_fft_size(grid.n)
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n
    phase = np.exp(1j * conj.points * grid.start / conj.scale).reshape(shape)
    spec = np.fft.ifftshift(values * phase, axes=axis)
    out = np.fft.ifft(spec, axis=axis)
    return out * (grid.n * conj.spacing / np.sqrt(2.0 * np.pi * conj.scale))


def transform(field: Field, scale: float) -> Field:
    if not isinstance(field.grid, Grid):
        raise GridError("forward transform expects a position-space field")
    vals, conj = transform_axis(field.values, field.grid, scale)
    return Field(conj, vals)


def inverse_transform(field: Field, scale: float | None = None) -> Field:
    """Back to position space.

    With ``scale`` equal to the forward scale this is the exact inverse.  A
    different ``scale`` s2 reconstructs on a lattice stretched by s2/s1, i.e.
    ``sqrt(s1/s2) f(x s1/s2)`` sampled at the stretched points.
    """
    conj = field.grid
    if not isinstance(conj, ConjugateGrid):
        raise GridError("inverse transform expects a conjugate-space field")
    if scale is None or np.isclose(scale, conj.scale, rtol=1e-15, atol=0.0):
        return Field(conj.base, inverse_transform_axis(field.values, conj))
    ratio = scale / conj.scale
    stretched = Grid(conj.base.n, conj.base.extent * ratio, conj.base.center * ratio)
    vals = inverse_transform_axis(field.values, conj) / np.sqrt(ratio)
    return Field(stretched, vals)


def convolve(f: Field, g: Field) -> Field:
    """Periodic convolution ``h(x) = Int f(y) g(x - y + c) dy`` on a shared grid.

    ``g`` is read as a kernel indexed by offset from the grid center ``c``, so
    two kernels centred on ``c`` convolve to a result centred on ``c``.
    """
    if not (isinstance(f.grid, Grid) and isinstance(g.grid, Grid)) or not f.grid.same_as(g.grid):
        raise GridError("convolution needs both fields on the same position grid")
    n = f.grid.n
    if n % 2:
        raise GridError("convolution needs an even sample count")
    h = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(np.fft.ifftshift(g.values)))
    if np.isrealobj(f.values) and np.isrealobj(g.values):
        h = h.real
    return Field(f.grid, h * f.grid.spacing)


def _wavenumbers(grid: AnyGrid) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)
    if grid.n % 2 == 0:
        k[grid.n // 2] = 0.0  # Nyquist mode has no odd-symmetric partner
    return k


def spectral_derivative_axis(values: np.ndarray, grid: AnyGrid, axis: int = -1) -> np.ndarray:
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n
    k = _wavenumbers(grid).reshape(shape)
    return np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis)


def spectral_derivative(field: Field) -> Field:
    out = spectral_derivative_axis(field.values, field.grid)
    if np.isrealobj(field.values):
        out = out.real
    return Field(field.grid, out)


def moment(density: Field, n: int) -> float:
    """Riemann-sum moment ``sum x^n rho(x) dx``.

    Warns with :class:`AccuracyWarning` when the density is not normalized
    to 1e-6; the moment is returned regardless.
    """
    rho = np.asarray(density.values)
    if np.iscomplexobj(rho):
        if np.max(np.abs(rho.imag)) > 0:
            raise GridError("moment expects a real density")
        rho = rho.real
    dx = density.grid.spacing
    total = np.sum(rho) * dx
    if abs(total - 1.0) > 1e-6:
        warnings.warn(f"density integrates to {total:.9g}, not 1", AccuracyWarning, stacklevel=2)
    x = density.grid.points
    return float(np.sum(x**n * rho) * dx)


def normalize(field: Field) -> Field:
    nrm = field.norm()
    if nrm == 0:
        raise GridError("cannot normalize a zero field")
    return Field(field.grid, field.values / nrm)


def gaussian_amplitude(grid: Grid, mean: float = 0.0, std: float = 1.0, k0: float = 0.0) -> Field:
    """Normalized amplitude with ``|psi|^2 = N(mean, std^2)`` and carrier ``exp(i k0 x)``."""
    if std <= 0:
        raise GridError("std must be positive")
    x = grid.points
    amp = np.exp(-((x - mean) ** 2) / (4.0 * std**2) + 1j * k0 * x)
    return normalize(Field(grid, amp))
