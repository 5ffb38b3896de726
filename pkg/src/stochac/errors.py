"""Exception hierarchy shared by all modules."""


class StochACError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(StochACError, ValueError):
    pass


class GeometryError(StochACError):
    pass


class EvaluationError(StochACError):
    """A pointwise function could not be evaluated (e.g. no branch matched)."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SolverError(StochACError):
    pass


class NonconvergenceError(SolverError):
    """Nonlinear iteration hit ``max_iter``; carries the last iterate."""

    def __init__(self, message, iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations


class DivergenceError(SolverError):
    def __init__(self, message, iterate=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.iterations = iterations


class UndefinedOrderError(StochACError, ValueError):
    pass


class ConfigError(StochACError, ValueError):
    """Bad configuration; ``line`` is the 1-based source line when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
