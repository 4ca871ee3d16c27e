"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ParameterError means a bad config or
usage (exit 2), everything else is a data error (exit 1).
"""


class HalmapError(Exception):
    """Base class for all errors raised by this package."""


class DimensionsError(HalmapError):
    """Shapes of operands do not match the operator or each other."""


class ParameterError(HalmapError):
    """A configuration value or argument is out of its valid range."""


class SizeError(HalmapError):
    """A dense factorization would exceed the configured size guard."""


class FormatError(HalmapError):
    """A file does not conform to its declared format.

    Carries the byte offset at which parsing failed, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SolverError(HalmapError):
    """An iterative solver diverged or failed to make progress."""


class StabilityError(HalmapError):
    """The stability inequality was violated beyond tolerance."""
