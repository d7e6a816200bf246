"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GPricingError(Exception):
    """Base class for all package errors."""


class ValidationError(GPricingError, ValueError):
    """Raised when inputs violate a documented precondition."""


class CourantError(ValidationError):
    """Raised when ``mu * dt`` exceeds the solver's contraction cap.

    ``min_steps`` is the smallest step count that satisfies the cap on the
    same time span.
    """

    def __init__(self, message: str, min_steps: int):
        super().__init__(message)
        self.min_steps = min_steps


class ConvergenceError(GPricingError, RuntimeError):
    """Raised when a Picard iteration exhausts its budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual
