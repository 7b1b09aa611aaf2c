"""Generalized operators, the modified Schrodinger equation and its dispersion.

In ``(u, v)`` storage the observed position is multiplication by ``u + v``
and the observed momentum is ``P = -i hbar d/du - i beta d/dv`` (each
derivative taken with the other storage coordinate held fixed).  Time
evolution solves ``i (hbar + beta) dPsi/dt = (P^2 / 2m + V(X)) Psi`` with a
Strang split step; the kinetic factor is diagonal on the ``(p, w)`` lattice.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np

from .errors import AccuracyWarning, DomainError, GridError, StepSizeError
from .grid import Field, Field2D, Grid, spectral_derivative_axis
from .measurement import position_grid
from .smearing import SmearedState, momentum_representation

__all__ = [
    "Hamiltonian",
    "EvolutionConfig",
    "apply_P",
    "apply_X",
    "apply_X_momentum",
    "apply_H",
    "expectation",
    "spectral_tail",
    "evolve",
    "default_dt",
    "energy",
    "dispersion",
    "energy_frequency",
    "group_velocities",
    "heisenberg_residual",
    "harmonic_potential",
]

Potential = Union[Callable[[np.ndarray], np.ndarray], Field, None]

#: Fraction of spectral weight in the outer band that triggers a warning.
TAIL_TOLERANCE = 1e-6
#: Largest tolerated change of the norm in one step.
NORM_DRIFT_PER_STEP = 1e-9
#: Largest potential phase advance per step, in radians.
MAX_POTENTIAL_PHASE = np.pi


@dataclass(frozen=True)
class Hamiltonian:
    """``P^2 / 2m + V(x')`` with ``V`` a callable or a field on the ``x'`` lattice."""

    mass: float
    potential: Potential = None

    def __post_init__(self):
        if not (np.isfinite(self.mass) and self.mass > 0):
            raise DomainError(f"mass must be positive, got {self.mass}")
        if isinstance(self.potential, Field) and np.iscomplexobj(self.potential.values):
            if np.any(self.potential.values.imag != 0):
                raise DomainError("potential must be real")

    def potential_on(self, state: SmearedState) -> np.ndarray | None:
        """``V(u + v)`` on the state's 2-D lattice, or ``None`` for a free particle."""
        if self.potential is None:
            return None
        if isinstance(self.potential, Field):
            xg = position_grid(state)
            if not (isinstance(self.potential.grid, Grid) and self.potential.grid.same_as(xg)):
                raise GridError("potential field must live on the state's x' lattice")
            nu, nv = state.amplitudes.shape
            idx = np.arange(nu)[:, None] + np.arange(nv)[None, :]
            return np.asarray(self.potential.values, dtype=float)[idx]
        vals = np.asarray(self.potential(state.xprime_points()))
        if np.iscomplexobj(vals):
            if np.any(vals.imag != 0):
                raise DomainError("potential must be real")
            vals = vals.real
        vals = np.broadcast_to(vals, state.amplitudes.shape).astype(float)
        if not np.all(np.isfinite(vals)):
            raise DomainError("potential is not finite on the lattice")
        return vals


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise DomainError(f"steps must be a nonnegative integer, got {self.steps}")

    @property
    def duration(self) -> float:
        return self.dt * self.steps


def harmonic_potential(mass: float, omega: float, center: float = 0.0):
    """``V(x') = m omega^2 (x' - center)^2 / 2``."""
    return lambda x: 0.5 * mass * omega**2 * (x - center) ** 2


def _unpack(field):
    if isinstance(field, SmearedState):
        return field.amplitudes, field.u_grid, field.v_grid, field.hbar, field.beta
    raise DomainError("expected a SmearedState")


def _wavenumbers(grid: Grid) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.spacing)


def spectral_tail(values: np.ndarray) -> float:
    """Fraction of spectral weight in the outer quarter of either axis band."""
    spec = np.abs(np.fft.fft2(values)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    n0, n1 = spec.shape
    edge0 = np.abs(np.fft.fftfreq(n0)) >= 0.375
    edge1 = np.abs(np.fft.fftfreq(n1)) >= 0.375
    mask = edge0[:, None] | edge1[None, :]
    return float(spec[mask].sum() / total)


def apply_P(
    field: SmearedState | Field2D,
    hbar: float | None = None,
    beta: float | None = None,
    warn: bool = True,
) -> np.ndarray:
    """``(-i hbar d/du - i beta d/dv) Psi`` via spectral derivatives.

    Accepts a :class:`SmearedState`, or a :class:`Field2D` on ``(u, v)``
    lattices together with explicit ``hbar`` and ``beta``.
    """
    if isinstance(field, Field2D):
        if hbar is None or beta is None:
            raise DomainError("a bare field needs explicit hbar and beta")
        vals, ug, vg = field.values, field.grid0, field.grid1
    else:
        vals, ug, vg, hbar, beta = _unpack(field)
    if warn and spectral_tail(vals) > TAIL_TOLERANCE:
        warnings.warn("state has significant weight near the lattice band edge", AccuracyWarning, 2)
    du = spectral_derivative_axis(vals, ug, axis=0)
    dv = spectral_derivative_axis(vals, vg, axis=1)
    return -1j * (hbar * du + beta * dv)


def apply_X(field: SmearedState | Field2D) -> np.ndarray:
    """Multiply by the observed coordinate ``x' = u + v``."""
    if isinstance(field, Field2D):
        vals, ug, vg = field.values, field.grid0, field.grid1
    else:
        vals, ug, vg = field.amplitudes, field.u_grid, field.v_grid
    return vals * (ug.points[:, None] + vg.points[None, :])


def apply_X_momentum(state: SmearedState) -> Field2D:
    """``X`` in the momentum representation, ``i hbar d/dp + i beta d/dw``, acting on ``Psi~``.

    The derivative along a spectral axis reproduces multiplication by the
    position coordinate only when that coordinate is centred on zero, so
    both storage lattices must be centred at the origin.
    """
    if abs(state.u_grid.center) > 1e-12 * state.u_grid.extent or abs(state.v_grid.center) > 0:
        raise GridError("the momentum-route X needs lattices centred at zero")
    mom = momentum_representation(state)
    dp = spectral_derivative_axis(mom.values, mom.grid0, axis=0)
    dw = spectral_derivative_axis(mom.values, mom.grid1, axis=1)
    return Field2D(mom.grid0, mom.grid1, 1j * (state.hbar * dp + state.beta * dw))


def _kinetic_diagonal(state: SmearedState) -> np.ndarray:
    """``(p + w)^2`` in raw FFT ordering of the ``(u, v)`` axes."""
    p = state.hbar * _wavenumbers(state.u_grid)
    w = state.beta * _wavenumbers(state.v_grid)
    return (p[:, None] + w[None, :]) ** 2


def apply_H(state: SmearedState, H: Hamiltonian) -> np.ndarray:
    kin = np.fft.ifft2(np.fft.fft2(state.amplitudes) * _kinetic_diagonal(state)) / (2.0 * H.mass)
    V = H.potential_on(state)
    return kin if V is None else kin + V * state.amplitudes


def expectation(state: SmearedState, applied: np.ndarray) -> complex:
    """``<Psi | A Psi>`` given ``A Psi`` on the same lattice."""
    return complex(np.vdot(state.amplitudes, applied) * state.cell)


def energy(state: SmearedState, H: Hamiltonian) -> float:
    return expectation(state, apply_H(state, H)).real


def default_dt(state: SmearedState, H: Hamiltonian, max_phase: float = 0.1) -> float:
    """Step for which the phase advanced by either split factor stays below ``max_phase``.

    Only the part of the lattice where the state has weight is considered.
    """
    hb = state.hbar + state.beta
    weight = np.abs(np.fft.fft2(state.amplitudes)) ** 2
    occupied = weight > 1e-12 * weight.max()
    kin_max = _kinetic_diagonal(state)[occupied].max() / (2.0 * H.mass)
    rates = [kin_max / hb]
    V = H.potential_on(state)
    if V is not None:
        dens = np.abs(state.amplitudes) ** 2
        region = dens > 1e-12 * dens.max()
        rates.append(np.abs(V[region]).max() / hb)
    rate = max(rates)
    return max_phase / rate if rate > 0 else 1.0


def evolve(state: SmearedState, H: Hamiltonian, cfg: EvolutionConfig) -> SmearedState:
    """Strang split-step integration of the modified Schrodinger equation.

    Raises :class:`StepSizeError` when the potential turns the phase by more
    than ``MAX_POTENTIAL_PHASE`` per step where the state lives, or when the
    norm drifts by more than ``NORM_DRIFT_PER_STEP`` in a step.
    """
    if cfg.steps == 0:
        return state
    return _propagate(state, H, cfg.dt, cfg.steps)


def _propagate(state: SmearedState, H: Hamiltonian, dt: float, steps: int) -> SmearedState:
    hb = state.hbar + state.beta
    half_kin = np.exp(-0.5j * dt * _kinetic_diagonal(state) / (2.0 * H.mass * hb))
    V = H.potential_on(state)
    psi = np.array(state.amplitudes, dtype=complex)
    if V is None:
        full = half_kin**2
        spec = np.fft.fft2(psi)
        for _ in range(steps):
            spec *= full
        out = np.fft.ifft2(spec)
    else:
        dens = np.abs(psi) ** 2
        region = dens > 1e-12 * dens.max()
        if np.abs(V[region]).max() * abs(dt) / hb > MAX_POTENTIAL_PHASE:
            raise StepSizeError("time step too coarse: potential phase exceeds pi per step")
        pot = np.exp(-1j * dt * V / hb)
        nrm0 = np.sum(np.abs(psi) ** 2)
        spec = np.fft.fft2(psi) * half_kin
        for step in range(steps):
            psi = np.fft.ifft2(spec) * pot
            spec = np.fft.fft2(psi)
            spec *= half_kin if step == steps - 1 else half_kin**2
            nrm = np.sum(np.abs(spec) ** 2) / spec.size
            if abs(nrm - nrm0) > NORM_DRIFT_PER_STEP * nrm0:
                raise StepSizeError(f"norm drifted by {abs(nrm / nrm0 - 1):.3g} in one step")
            nrm0 = nrm
        out = np.fft.ifft2(spec)
    return state.with_amplitudes(out)


def dispersion(k, k_prime, mass: float, hbar: float, beta: float):
    """``omega = (hbar k + beta (k' - k))^2 / (2 m (hbar + beta))``."""
    if not mass > 0:
        raise DomainError("mass must be positive")
    k = np.asarray(k, dtype=float)
    p_prime = hbar * k + beta * (np.asarray(k_prime, dtype=float) - k)
    out = p_prime**2 / (2.0 * mass * (hbar + beta))
    return float(out) if out.ndim == 0 else out


def energy_frequency(E, hbar: float, beta: float):
    """``omega = E / (hbar + beta)``."""
    return E / (hbar + beta)


def group_velocities(k: float, dk: float, mass: float, hbar: float, beta: float):
    """Velocities of a free packet centred at matter wavenumber ``k`` and geometry wavenumber ``dk``.

    Returns ``(v_u, v_x)``: the matter coordinate moves at ``d omega / dk`` with
    ``dk = k' - k`` held fixed, and the observed coordinate ``x' = u + v`` at
    ``p' / m``, the sum of the two partial derivatives.
    """
    p_prime = hbar * k + beta * dk
    return hbar * p_prime / (mass * (hbar + beta)), p_prime / mass


def heisenberg_residual(
    state: SmearedState,
    H: Hamiltonian,
    observable: Literal["X", "P"],
    dt: float = 1e-3,
) -> float:
    """``|d<O>/dt - (i / (hbar + beta)) <[H, O]>|`` at the current state.

    The time derivative is a central difference of two short evolutions.
    """
    if observable == "X":
        op = apply_X
    elif observable == "P":
        op = lambda s: apply_P(s, warn=False)  # noqa: E731
    else:
        raise DomainError(f"observable must be 'X' or 'P', got {observable!r}")
    fwd = _propagate(state, H, dt, 1)
    bwd = _propagate(state, H, -dt, 1)
    rate = (expectation(fwd, op(fwd)) - expectation(bwd, op(bwd))).real / (2.0 * dt)
    o_psi = state.with_amplitudes(op(state))
    h_psi = state.with_amplitudes(apply_H(state, H))
    comm = expectation(state, apply_H(o_psi, H)) - expectation(state, op(h_psi))
    predicted = (1j * comm / (state.hbar + state.beta)).real
    return abs(rate - predicted)
