"""Exception types shared across the package."""


class TimeScaleError(Exception):
    """Base class for all package errors."""


class InvalidSpec(TimeScaleError, ValueError):
    """A time scale, problem or file specification is malformed."""


class DegenerateScale(TimeScaleError, ValueError):
    """The time scale has too few points for the requested operation."""


class ParseError(TimeScaleError, ValueError):
    """Expression source could not be parsed.

    ``offset`` is the byte offset into the source where parsing failed.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class EvalDomain(TimeScaleError, ArithmeticError):
    """An expression was evaluated outside its domain (log of 0, 1/0, ...)."""


class DomainError(TimeScaleError, ArithmeticError):
    """An integrand hit a domain violation at grid index ``index``."""

    def __init__(self, message, index=None):
        if index is not None:
            message = f"{message} (grid index {index})"
        super().__init__(message)
        self.index = index


class NumericalFailure(TimeScaleError, RuntimeError):
    """An iterative numerical method failed to produce a result."""
