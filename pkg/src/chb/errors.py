"""Exception types shared across the simulator."""


class CHBError(Exception):
    """Base class for all simulator errors."""


class ConfigError(CHBError, ValueError):
    pass


class DomainError(CHBError, ValueError):
    """A potential or entropy function was evaluated at or outside its domain."""


class AssumptionError(CHBError):
    """A structural assumption on the model or kernel does not hold."""


class GridMismatch(CHBError, ValueError):
    pass


class GuardBandError(CHBError):
    """A time step produced values too close to the pure phases."""

    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class SolverError(CHBError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class AbortRun(CHBError):
    pass


class WindowError(CHBError, ValueError):
    pass


class CoverageError(CHBError, ValueError):
    pass
