"""Numerical toolkit for the smeared-space quantum formalism."""

from .errors import (
    AccuracyWarning,
    DomainError,
    GridError,
    ImpossibleOutcomeError,
    ResolutionError,
    SmearedSpaceError,
    StepSizeError,
    UnsupportedError,
    ValidityWarning,
)
from .grid import ConjugateGrid, Field, Field2D, Grid, gaussian_amplitude, transform, inverse_transform
from .scales import PhysicalConstants, PhysicalScales, SmearingParameters, derive_scales
from .smearing import SmearedState, SmearingKernel, make_kernel, smear
from .measurement import (
    OutcomeHistory,
    collapse_momentum,
    collapse_position,
    generalized_variance,
    momentum_density,
    position_density,
    sequential_collapse,
    sequential_measure,
)
from .uncertainty import commutator_expectation, optimal_widths, unified_relation
from .dynamics import EvolutionConfig, Hamiltonian, evolve
from .multiparticle import entanglement_entropy, make_two_body_kernel, smear_two
from .povm import povm_independence_demo, resolution_kernel
from .massradius import compton, hoop_condition, schwarzschild, unified_radius

__version__ = "0.1.0"

__all__ = [n for n, v in list(globals().items()) if not n.startswith("_") and not isinstance(v, type(grid))]
