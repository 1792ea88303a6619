"""Exception and warning types shared across the package."""


class HetsenseError(Exception):
    """Base class for all package errors."""


class FactorizationError(HetsenseError, ArithmeticError):
    """A covariance matrix could not be factorized within the jitter ladder."""


class QuadratureNotConverged(HetsenseError, ArithmeticError):
    """Doubling the quadrature order moved the result by more than ``abs_tol``."""


class DimensionMismatch(HetsenseError, ValueError):
    pass


class DegenerateWeights(HetsenseError, ArithmeticError):
    """Importance weights collapsed (effective sample size too small)."""


class Infeasible(HetsenseError):
    """No activation mask meets the requested MSE bound."""


class TooLarge(HetsenseError, ValueError):
    """Exhaustive enumeration requested for too many sensors."""


class ValidationError(HetsenseError, ValueError):
    """Invalid configuration. ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class ParseError(HetsenseError, ValueError):
    pass


class SchemaError(HetsenseError, ValueError):
    """Malformed sensor CSV. ``line`` is 1-based, counting the header."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class DuplicateId(SchemaError):
    pass


class DuplicateLocationWarning(UserWarning):
    """Two sensor locations coincide; the Gram matrix is rank deficient."""
