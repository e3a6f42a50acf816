"""Exception types shared across the package."""


class SgdPlanError(Exception):
    """Base class for every error this package raises on purpose."""


class InputError(SgdPlanError, ValueError):
    """Invalid argument, malformed file, or unsatisfiable configuration."""


class ModelValidityError(SgdPlanError):
    """Fitted parameters are outside the domain where the formulas mean anything.

    Typical cause: a non-positive asymptotic update count, which makes the
    optimal-batch expressions undefined.  Callers should go back to the fit
    and its flags instead of trusting downstream numbers.
    """


class DivergenceError(SgdPlanError):
    """SGD produced a non-finite loss."""

    def __init__(self, step: int, message: str | None = None):
        self.step = step
        super().__init__(message or f"non-finite loss at update {step}")


class PartialResultError(SgdPlanError):
    """Some seeds did not converge; the converged subset rides along."""

    def __init__(self, message: str, converged, failed):
        self.converged = list(converged)
        self.failed = list(failed)
        super().__init__(message)


class SweepError(SgdPlanError):
    """A sweep row failed; carries the offending mini-batch size."""

    def __init__(self, minibatch: int, cause, partial):
        self.minibatch = minibatch
        self.partial = list(partial)
        super().__init__(f"M={minibatch}: {cause}")
