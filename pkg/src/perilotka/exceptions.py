"""Exception hierarchy shared across the package."""


class PerilotkaError(Exception):
    """Base class for all package errors."""


class DomainError(PerilotkaError, ValueError):
    """An input lies outside the domain of an operation."""


class QuadratureError(PerilotkaError, ArithmeticError):
    """Adaptive quadrature failed to reach its tolerance.

    The best available estimate is kept on ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class IntegrationError(PerilotkaError, RuntimeError):
    """Time stepping aborted; ``trajectory`` holds what was computed so far."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class OrbitError(PerilotkaError, RuntimeError):
    """Periodic orbit search did not converge."""

    def __init__(self, message, best=None, residual=None):
        super().__init__(message)
        self.best = best
        self.residual = residual


class ConfigError(PerilotkaError, ValueError):
    """Invalid scenario configuration; ``path`` names the offending field."""

    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
