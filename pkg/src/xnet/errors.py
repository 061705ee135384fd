"""Exception types shared across the package."""


class XnetError(Exception):
    """Base class for all package errors."""


class StructuralError(XnetError, ValueError):
    """Malformed input: wrong sizes, unknown labels, invalid trees."""


class GuardError(XnetError):
    """An enumeration or search guard refused the request."""


class SingularityError(XnetError, ArithmeticError):
    """A derivative was requested at a degenerate (zero-length) configuration."""
