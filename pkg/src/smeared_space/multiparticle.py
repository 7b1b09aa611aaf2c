"""Two-particle smeared states and smearing-induced entanglement.

Amplitudes are stored with axes ``(u1, v1, u2, v2)`` so that the cut between
particle 1 and particle 2 is a plain reshape to a matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import DomainError, GridError, ResolutionError
from .grid import Field2D, Grid
from .smearing import spacings_match

__all__ = [
    "TwoParticleState",
    "KernelTwoBody",
    "make_two_body_kernel",
    "smear_two",
    "schmidt_coefficients",
    "entanglement_entropy",
    "factorization_residual",
    "DEFAULT_MEMORY_BUDGET",
]

#: Largest 4-D state, in bytes, that :func:`smear_two` will allocate.
DEFAULT_MEMORY_BUDGET = 512 * 2**20


@dataclass(frozen=True)
class KernelTwoBody:
    """Normalized joint kernel amplitude ``g(v1, v2)``."""

    kind: str
    sigma_g: float
    grid: Grid
    amplitude: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitude)
        if amp.shape != (self.grid.n, self.grid.n):
            raise GridError("kernel amplitude must be square over the v lattice")
        amp = amp.copy()
        amp.flags.writeable = False
        object.__setattr__(self, "amplitude", amp)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitude) ** 2) * self.grid.spacing**2))


def make_two_body_kernel(
    kind: Literal["product-gaussian", "radial-exponential", "custom"],
    sigma_g: float,
    v_grid: Grid,
    samples: np.ndarray | None = None,
) -> KernelTwoBody:
    """Joint kernel for two particles sharing one ``v`` lattice.

    ``product-gaussian`` is ``g(v1) g(v2)`` with Gaussian factors of standard
    deviation ``sigma_g``.  ``radial-exponential`` has
    ``|g|^2 ~ exp(-r / lam)`` with ``r = sqrt(v1^2 + v2^2)`` and
    ``lam = sigma_g / sqrt(3)``, which gives each coordinate the standard
    deviation ``sigma_g``.
    """
    if not sigma_g > 0:
        raise DomainError("sigma_g must be positive")
    if sigma_g < 2.0 * v_grid.spacing:
        raise ResolutionError("sigma_g is below 2 lattice spacings")
    v = v_grid.points
    if kind == "product-gaussian":
        g1 = np.exp(-(v**2) / (4.0 * sigma_g**2))
        amp = np.outer(g1, g1)
    elif kind == "radial-exponential":
        lam = sigma_g / np.sqrt(3.0)
        r = np.hypot(v[:, None], v[None, :])
        amp = np.exp(-r / (2.0 * lam))
    elif kind == "custom":
        if samples is None:
            raise DomainError("custom kernels need explicit samples")
        amp = np.asarray(samples)
    else:
        raise DomainError(f"unknown two-body kernel kind {kind!r}")
    nrm = np.sqrt(np.sum(np.abs(amp) ** 2) * v_grid.spacing**2)
    if not nrm > 0:
        raise DomainError("kernel samples vanish on the lattice")
    return KernelTwoBody(kind, float(sigma_g), v_grid, amp / nrm)


@dataclass(frozen=True)
class TwoParticleState:
    """``Psi12(u1, v1, u2, v2)`` on a shared ``u`` lattice and a shared ``v`` lattice."""

    u_grid: Grid
    v_grid: Grid
    amplitudes: np.ndarray
    hbar: float = 1.0
    beta: float = 1.0
    #: ``(psi12(u1, u2), g(v1, v2))`` when the state is known to be their product.
    factors: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        nu, nv = self.u_grid.n, self.v_grid.n
        vals = np.asarray(self.amplitudes, dtype=complex)
        if vals.shape != (nu, nv, nu, nv):
            raise GridError(f"amplitudes have shape {vals.shape}, expected {(nu, nv, nu, nv)}")
        vals.flags.writeable = False
        object.__setattr__(self, "amplitudes", vals)

    @property
    def cell(self) -> float:
        return (self.u_grid.spacing * self.v_grid.spacing) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2) * self.cell))

    def bipartite_matrix(self, swap: bool = False) -> np.ndarray:
        """Rows index particle 1 ``(u1, v1)``, columns particle 2, scaled to unit Frobenius norm."""
        nu, nv = self.u_grid.n, self.v_grid.n
        mat = self.amplitudes.reshape(nu * nv, nu * nv) * np.sqrt(self.cell)
        return mat.T if swap else mat


def smear_two(
    psi12: Field2D,
    kernel: KernelTwoBody,
    hbar: float = 1.0,
    beta: float = 1.0,
    memory_budget: int = DEFAULT_MEMORY_BUDGET,
) -> TwoParticleState:
    """``Psi12 = g(v1, v2) psi12(u1, u2)``."""
    ug = psi12.grid0
    if not (isinstance(ug, Grid) and isinstance(psi12.grid1, Grid) and ug.same_as(psi12.grid1)):
        raise GridError("both particles must share one u lattice")
    if not spacings_match(ug, kernel.grid):
        raise GridError("u and v lattices must share one spacing")
    nrm = np.sqrt(np.sum(np.abs(psi12.values) ** 2) * ug.spacing**2)
    if abs(nrm - 1.0) > 1e-6:
        raise DomainError(f"psi12 must be normalized, has norm {nrm:.9g}")
    nu, nv = ug.n, kernel.grid.n
    need = 16 * (nu * nv) ** 2
    if need > memory_budget:
        raise DomainError(f"state needs {need / 2**20:.1f} MiB, budget is {memory_budget / 2**20:.1f} MiB")
    amps = psi12.values[:, None, :, None] * kernel.amplitude[None, :, None, :]
    return TwoParticleState(ug, kernel.grid, amps, hbar, beta, (psi12.values, kernel.amplitude))


def schmidt_coefficients(state: TwoParticleState, swap: bool = False) -> np.ndarray:
    """Squared singular values across the particle cut, normalized to sum to 1.

    For a smeared product ``g(v1, v2) psi12(u1, u2)`` the cut matrix is the
    Kronecker product of the two factors, so its singular values are the
    pairwise products of the factors' singular values.  That avoids an SVD
    of the full ``(nu nv)``-square matrix.  Swapping the particles transposes
    the matrix and leaves the coefficients unchanged.
    """
    if state.factors is not None:
        a, b = (np.linalg.svd(f, compute_uv=False) for f in state.factors)
        s = np.sort(np.outer(a, b).ravel())[::-1]
    else:
        s = np.linalg.svd(state.bipartite_matrix(swap), compute_uv=False)
    lam = s**2
    return lam / lam.sum()


def entanglement_entropy(state: TwoParticleState, swap: bool = False) -> float:
    """Von Neumann entropy (natural log) of either particle's reduced state."""
    lam = schmidt_coefficients(state, swap)
    lam = lam[lam > 0]
    return float(max(-np.sum(lam * np.log(lam)), 0.0))


def factorization_residual(state: TwoParticleState) -> float:
    """L2 distance to the nearest product state across the cut, ``sqrt(1 - lam_1)``."""
    lam = schmidt_coefficients(state)
    return float(np.sqrt(max(1.0 - lam[0], 0.0)))
