"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation supports."""


class ConfigError(ValueError):
    """A configuration object or file is invalid."""


class ConvergenceError(ArithmeticError):
    """A numerical procedure stopped before reaching its tolerance.

    The best available estimate is kept on ``estimate`` so callers can decide
    whether to use it anyway.
    """

    def __init__(self, message, estimate=float("nan"), error=float("nan"), count=0):
        super().__init__(message)
        self.estimate = estimate
        self.error = error
        self.count = count
