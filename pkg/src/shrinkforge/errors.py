"""Shared exception types."""


class ShrinkforgeError(Exception):
    """Base class for package errors."""


class ConfigError(ShrinkforgeError):
    """Invalid configuration value or inconsistent parameter combination."""


class DomainError(ShrinkforgeError):
    """Argument outside the mathematical domain of an operation."""


class ParseError(ShrinkforgeError):
    """Malformed input file; carries row/column location when available."""

    def __init__(self, message, row=None, column=None):
        loc = ""
        if row is not None:
            loc = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + loc)
        self.row = row
        self.column = column


class RankError(ShrinkforgeError):
    """Design matrix is singular or numerically rank deficient."""


class CapabilityError(ShrinkforgeError):
    """Requested method cannot run at the given sample size / dimension."""


class ContractError(ShrinkforgeError):
    """Operation called outside its documented precondition."""


class DivergenceError(ShrinkforgeError):
    """Iterative solver diverged."""


class ExcludedCoordinateError(ShrinkforgeError):
    """A coordinate marked EXCLUDE carries a nonzero coefficient."""
