"""Exception and warning types shared across the package."""


class SmearedSpaceError(Exception):
    """Base class for all package errors."""


class DomainError(SmearedSpaceError, ValueError):
    """An input lies outside the domain where a formula is defined."""


class GridError(SmearedSpaceError, ValueError):
    """Incompatible or malformed lattice configuration."""


class ResolutionError(GridError):
    """A feature is narrower than the lattice can resolve."""


class ImpossibleOutcomeError(SmearedSpaceError):
    """A measurement outcome has (numerically) zero probability density."""


class StepSizeError(SmearedSpaceError):
    """Time step too coarse for the requested evolution accuracy."""


class UnsupportedError(SmearedSpaceError, NotImplementedError):
    """The requested operation is not defined for these arguments."""


class AccuracyWarning(UserWarning):
    """A numerical result may be less accurate than the stated tolerance."""


class ValidityWarning(UserWarning):
    """An approximate formula is used outside its validity window."""
