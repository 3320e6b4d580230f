"""Exception hierarchy. The CLI maps each family to an exit code."""


class FracPQError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 1


class ConfigError(FracPQError, ValueError):
    """Invalid problem configuration (parameters, grid, weight expressions)."""

    exit_code = 2


class DomainError(FracPQError, ValueError):
    """An argument lies outside the domain of a mathematical operation."""

    exit_code = 2


class GridMismatchError(FracPQError, ValueError):
    """Grid functions or kernel tables that live on different grids."""

    exit_code = 2


class GeometryError(FracPQError, ValueError):
    """A ball or annulus contains too few grid nodes."""

    exit_code = 4


class PreconditionError(FracPQError):
    """Inputs violate a precondition of the requested computation."""

    exit_code = 4


class ThresholdError(PreconditionError):
    """A parameter lies beyond a threshold (e.g. lambda_0, c_infty <= 0)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = dict(report or {})


class NoRootsError(PreconditionError):
    """The fibering map has no critical point of the requested type."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile


class SeedingError(PreconditionError):
    """No admissible starting function could be generated."""


class BracketError(FracPQError):
    """A scalar search could not bracket its target."""

    exit_code = 3


class ConvergenceError(FracPQError):
    """An iterative solver stopped before reaching its tolerance."""

    exit_code = 3

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
