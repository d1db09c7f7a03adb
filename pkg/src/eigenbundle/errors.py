"""Exception hierarchy.

Every error carries a short ``code`` (the class name) so the CLI can print a
machine-parsable line before the human-readable message.
"""


class EigenbundleError(Exception):
    """Base class for model errors raised by this package."""

    @property
    def code(self) -> str:
        return type(self).__name__


class InvalidMarket(EigenbundleError, ValueError):
    pass


class SingularMatrix(EigenbundleError, ValueError):
    pass


class NotNegativeDefinite(EigenbundleError, ValueError):
    pass


class NotStrictlyStable(EigenbundleError, ValueError):
    pass


class DimensionMismatch(EigenbundleError, ValueError):
    pass


class ConvergenceFailure(EigenbundleError, RuntimeError):
    pass


class ConsistencyFailure(EigenbundleError, RuntimeError):
    pass


class InvalidRiskAversion(EigenbundleError, ValueError):
    pass


class AllQuantitiesZero(EigenbundleError, ValueError):
    pass


class InvalidSampleCount(EigenbundleError, ValueError):
    pass


class OptimizationFailure(EigenbundleError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RangeError(EigenbundleError, ValueError):
    pass


class ParseError(EigenbundleError, ValueError):
    """Malformed market or tax file. ``field`` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field
