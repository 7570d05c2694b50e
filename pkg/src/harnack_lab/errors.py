"""Exception types shared across the library."""


class DimensionMismatchError(ValueError):
    """An input vector or matrix has the wrong dimension."""


class NonConvergenceError(RuntimeError):
    """A quadrature or interval-splitting procedure failed to converge."""


class DivergedPathError(RuntimeError):
    """A simulated path left the representable range."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"path diverged at step {step}")


class EstimatorError(RuntimeError):
    """A Monte Carlo estimator could not produce a trustworthy value."""


class UnsupportedDimensionError(ValueError):
    """The operation is only defined for a specific state dimension."""
