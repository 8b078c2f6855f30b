from __future__ import annotations


class BeamModesError(Exception):
    """Base class for every error raised by the package."""


class DomainError(BeamModesError, ValueError):
    """Input outside the admissible set of an operation."""


class IntegrationError(BeamModesError, RuntimeError):
    def __init__(self, message: str, time: float | None = None) -> None:
        if time is not None:
            message = f"{message} (t={time!r})"
        super().__init__(message)
        self.time = time


class NumericalQualityError(BeamModesError):
    """A computed quantity violates its conservation or convergence check."""


class ConsistencyError(NumericalQualityError):
    """A rigorous stability criterion contradicts the monodromy verdict."""
