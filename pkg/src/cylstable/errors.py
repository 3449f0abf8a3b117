"""Exception types raised across the package."""


class CylStableError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CylStableError, ValueError):
    """Invalid parameters, dimensions or grids."""


class NumericalError(CylStableError, ArithmeticError):
    """A numerical routine failed to converge.

    ``diagnostics`` carries whatever the failing routine knew at the time
    (estimates, error bounds, subdivision counts).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
