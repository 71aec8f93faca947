"""Exception taxonomy shared across the library.

The CLI maps these onto distinct exit codes (see ``cli.EXIT_CODES``).
"""


class RollnikError(Exception):
    """Base class for library errors."""


class DomainError(RollnikError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class RegimeError(RollnikError):
    """The (d, alpha, m, lambda) combination is outside the supported regime,
    e.g. a 0-resolvent requested for a recurrent semigroup, or a plain
    Rollnik norm outside alpha < d < 2*alpha."""


class AccuracyError(RollnikError):
    """A quadrature or series did not reach its accuracy target.

    Carries the residual estimate in ``residual`` when available.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ResourceError(RollnikError):
    """A computation would exceed the configured memory/size budget."""


class ConsistencyError(RollnikError):
    """Independent routes to the same quantity disagree beyond their
    combined error estimates."""
