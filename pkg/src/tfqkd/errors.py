"""Exception hierarchy shared across the toolkit.

Exit-code mapping used by the CLI: validation problems exit 2,
infeasible estimation problems exit 3, configuration problems exit 4.
"""


class TfqkdError(Exception):
    """Base class for all toolkit errors."""


class DomainError(TfqkdError, ValueError):
    """An argument lies outside its mathematical domain."""


class UndefinedVisibilityError(DomainError):
    """Visibility requested for a window with zero total counts."""


class ErrorRateUndefinedError(DomainError):
    """Error rate requested while the gain is exactly zero."""


class ValidationError(TfqkdError, ValueError):
    """A record or configuration value violates an invariant."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ParseError(ValidationError):
    """A data or config file could not be parsed."""

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


class IncompleteDataError(ValidationError):
    """Required intensity pairs are missing from a yield record."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = tuple(missing)


class InfeasibleProblemError(TfqkdError):
    """The estimation LP admits no solution.

    ``suggested_relax`` is a uniform widening of every data window that
    restores feasibility; ``violated`` names the worst constraint.
    """

    def __init__(self, message, suggested_relax=None, violated=None):
        super().__init__(message)
        self.suggested_relax = suggested_relax
        self.violated = violated


class OracleUnstableError(TfqkdError):
    """Taylor-coefficient extraction failed its residual check."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ConfigurationError(TfqkdError):
    """A backend or pipeline is not configured for the requested scenario."""
