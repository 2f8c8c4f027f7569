"""Exception types shared across the package.

Every validation failure carries the measured residual (or the best value
found) so callers can report what was actually observed.
"""

from __future__ import annotations


class GapstabError(Exception):
    """Base class for package errors."""


class InvalidArgument(GapstabError, ValueError):
    """Malformed input: bad orders, weights, shapes, labels."""


class InvalidPVM(InvalidArgument):
    """Projections fail self-adjointness/idempotence/orthogonality/sum checks."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InvalidRepresentation(InvalidArgument):
    """Images fail unitarity or the multiplication law beyond tolerance."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class NonGeneratingSupport(InvalidArgument):
    """The support of a measure does not generate the group."""


class InvalidField(InvalidArgument):
    """q is not a supported prime power."""


class RankDeficient(InvalidArgument):
    """A generator matrix does not have full row rank."""


class ResourceCap(GapstabError):
    """An enumeration or dilation would exceed the configured cap."""


class SamplingFailure(GapstabError):
    """A randomized search exhausted its budget. Carries the best candidate."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class PreconditionViolation(GapstabError):
    """A mathematical hypothesis fails beyond tolerance; carries the residual."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DegenerateDecomposition(GapstabError):
    """Random choices hit a degenerate configuration; retrying may help."""
