"""Exception types shared by the package and mapped to CLI exit codes."""


class RotbecError(Exception):
    exit_code = 1


class ConfigurationError(RotbecError, ValueError):
    """Invalid parameters or an unusable setup (exit code 2)."""

    exit_code = 2


class DomainRangeError(ConfigurationError):
    """A requested evaluation window does not fit the available data."""


class NumericalError(RotbecError, RuntimeError):
    """An iterative procedure failed to converge or lost monotonicity (exit code 3)."""

    exit_code = 3


class ResolutionError(NumericalError):
    """The solution is too narrow for the grid; use a finer grid."""


class OrthogonalityError(NumericalError):
    """A right-hand side is not orthogonal to the operator kernel."""

    def __init__(self, message, inner_products=None):
        super().__init__(message)
        self.inner_products = inner_products


class InsufficientDataError(ConfigurationError):
    """Too few usable records for a fit."""


class OutputError(RotbecError, OSError):
    """An output path could not be written (exit code 4)."""

    exit_code = 4
