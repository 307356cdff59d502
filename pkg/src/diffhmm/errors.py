"""Exception types shared across the toolkit."""


class DiffHMMError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(DiffHMMError, ValueError):
    """An argument violates a documented precondition."""


class DomainError(InvalidInputError):
    """An observation lies outside a model's support."""


class UnsupportedModelError(DiffHMMError, TypeError):
    """The requested computation is undefined for this model family."""


class NonConvergenceError(DiffHMMError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class NumericFailureError(DiffHMMError, ArithmeticError):
    """A simulation produced a non-finite belief."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class ConfigError(DiffHMMError, ValueError):
    """A configuration document failed schema or semantic validation."""
