"""Exception hierarchy shared across the package.

Errors are categorized so that the CLI can map them to distinct exit codes:
parse errors for malformed input files, validation errors for inputs that
parse but violate a contract, numeric errors for failed computations.
"""


class CoresponseError(Exception):
    """Base class for all package errors."""


class ParseError(CoresponseError):
    """Raised when an input file cannot be parsed (bad cell, ragged row, ...)."""


class ValidationError(CoresponseError):
    """Raised when parsed data or configuration violates an invariant."""


class NumericError(CoresponseError):
    """Raised when a numeric procedure fails (e.g. non-convergence)."""
