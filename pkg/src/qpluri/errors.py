"""Exception types shared across the package."""


class DomainError(ValueError):
    """Raised when an argument falls outside an operation's domain."""


class SolverError(RuntimeError):
    """Raised when an iterative solve stops before meeting its tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
