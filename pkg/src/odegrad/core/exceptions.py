"""Exceptions raised by the odegrad library."""


class OdegradError(Exception):
    """Base class for all odegrad errors."""


class DimensionError(OdegradError, ValueError):
    """Exception raised when array shapes do not agree."""

    def __init__(self, operation: str, expected: object, actual: object) -> None:
        """Initialize dimension error.

        Args:
            operation: Name of the operation that rejected its input
            expected: Expected shape or dimension
            actual: Shape or dimension that was supplied
        """
        self.operation = operation
        self.expected = expected
        self.actual = actual
        super().__init__(f"{operation}: expected {expected}, got {actual}")


class NumericDomainError(OdegradError, ValueError):
    """Exception raised when an input lies outside a function's domain."""

    def __init__(self, operation: str, detail: str) -> None:
        self.operation = operation
        super().__init__(f"{operation}: {detail}")


class NonFiniteError(OdegradError, FloatingPointError):
    """Exception raised when a computation produces NaN or Inf."""

    def __init__(self, where: str, detail: str | None = None) -> None:
        self.where = where
        message = f"Non-finite value produced in {where}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ArgumentError(OdegradError, ValueError):
    """Exception raised for invalid argument values."""


class DivergenceError(OdegradError, RuntimeError):
    """Exception raised when a solver cannot reach the end of its interval."""

    def __init__(self, reason: str, steps: int, t: float) -> None:
        """Initialize divergence error.

        Args:
            reason: Why the solver stopped
            steps: Number of attempted steps when it stopped
            t: Time reached when it stopped
        """
        self.steps = steps
        self.t = t
        super().__init__(f"Solver diverged after {steps} steps at t={t:.6g}: {reason}")


class TrainingDivergenceError(OdegradError, RuntimeError):
    """Exception raised when a training loss becomes non-finite."""

    def __init__(self, iteration: int, loss: float, phase: str = "iteration") -> None:
        self.iteration = iteration
        self.loss = loss
        super().__init__(f"Training diverged at {phase} {iteration}: loss={loss}")


class CheckFailure(OdegradError):
    """Exception raised when numerical checks fail."""

    def __init__(self, failures: list[str]) -> None:
        """Initialize check failure.

        Args:
            failures: Human-readable descriptions of each failed check
        """
        self.failures = failures
        shown = "; ".join(failures[:5])
        more = f" (+{len(failures) - 5} more)" if len(failures) > 5 else ""
        super().__init__(f"{len(failures)} check(s) failed: {shown}{more}")


class ReversalWarning(UserWarning):
    """Warning emitted when a reverse-time solve does not reproduce the forward start state."""
