"""Exception hierarchy shared across the package.

Everything derives from ``InprError`` so callers can catch one base type;
each subclass also inherits ``ValueError`` to stay friendly to generic
error handling.
"""


class InprError(ValueError):
    """Base class for all errors raised by this package."""


class ConfigurationError(InprError):
    """Invalid parameter or option (bad lambda, unsupported order, ...)."""


class DomainError(InprError):
    """Numeric input outside the mathematical domain of an operation."""


class ShapeError(InprError):
    """Mismatched dimensions or misaligned vectors."""


class InputError(InprError):
    """Structurally invalid data (empty sets, missing target sample, ...)."""


class ParseError(InputError):
    """Malformed file content; carries a line number where possible."""


class NumericalError(InprError):
    """A solver produced non-finite output or failed to factorize."""


class TruncationError(InprError):
    """A series truncation cannot meet its accuracy requirement."""
