"""Exception hierarchy for copula-pce.

All exceptions inherit from PceError to enable catch-all handling.
The CLI maps them to exit codes:
    PceNumericalError, PceInfeasibleError  -> exit code 1
    PceConfigError, PceParameterError      -> exit code 2
    PceResourceError                       -> exit code 3
    PceCancellationError                   -> exit code 5
"""

from __future__ import annotations

from typing import Any

__all__ = [
    "ArtifactIntegrityError",
    "IllConditionedBasisError",
    "IntegrandEvaluationError",
    "NotPositiveDefiniteError",
    "PceCancellationError",
    "PceConfigError",
    "PceDomainError",
    "PceError",
    "PceInfeasibleError",
    "PceNumericalError",
    "PceParameterError",
    "PceResourceError",
    "PceValidationError",
]


class PceError(Exception):
    """Base class for all copula-pce exceptions."""


class PceConfigError(PceError):
    """Scenario is invalid or cannot be loaded."""


class PceValidationError(PceConfigError):
    """A model input (correlation matrix, marginal) violates its invariants."""


class ArtifactIntegrityError(PceConfigError):
    """An artifact is corrupt, of the wrong kind, or does not match its inputs."""


class PceParameterError(PceError, ValueError):
    """An API argument is out of range or dimensionally inconsistent."""


class PceDomainError(PceParameterError):
    """A probability or copula argument lies outside the open unit interval."""


class PceResourceError(PceError):
    """A tensor grid would exceed the configured node budget."""

    def __init__(self, message: str, *, nodes: int | None = None, budget: int | None = None):
        super().__init__(message)
        self.nodes = nodes
        self.budget = budget


class PceNumericalError(PceError):
    """Unrecoverable numerical breakdown."""


class NotPositiveDefiniteError(PceNumericalError):
    """Cholesky factorization of a correlation matrix failed."""

    def __init__(self, message: str, *, min_eigenvalue: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class IllConditionedBasisError(PceNumericalError):
    """The monomial Gram matrix cannot be whitened.

    ``pivot`` is the index of the first monomial whose leading principal
    minor fails, i.e. the first candidate to drop from the set.
    """

    def __init__(self, message: str, *, pivot: int | None = None, condition: float | None = None):
        super().__init__(message)
        self.pivot = pivot
        self.condition = condition


class IntegrandEvaluationError(PceNumericalError):
    """An integrand returned a non-finite value at a quadrature node."""

    def __init__(self, message: str, *, node: Any = None):
        super().__init__(message)
        self.node = node


class PceInfeasibleError(PceError):
    """The procurement program has no feasible point."""


class PceCancellationError(PceError):
    """The operation was cancelled by the caller."""
