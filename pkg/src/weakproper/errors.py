"""Exception types shared across the package."""


class WeakProperError(Exception):
    """Base class for domain errors raised by weakproper."""

    #: short machine-readable tag used in CLI error records
    kind = "error"

    def to_record(self):
        return {"error": self.kind, "message": str(self)}


class DimensionError(WeakProperError, ValueError):
    kind = "DimensionError"


class NotReconstructible(WeakProperError):
    """The transition matrix has no left inverse."""

    kind = "NotReconstructible"


class NonDifferentiable(WeakProperError):
    """A subgradient was requested where the potential has a cusp."""

    kind = "NonDifferentiable"


class LinkFailure(WeakProperError):
    """Numeric maximization of the conjugate objective did not converge."""

    kind = "LinkFailure"

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual

    def to_record(self):
        rec = super().to_record()
        rec["residual"] = self.residual
        return rec


class DivergenceDetected(WeakProperError):
    """Training objective fell below the divergence threshold."""

    kind = "DivergenceDetected"

    def __init__(self, message, epoch=None, step=None, objective=None):
        super().__init__(message)
        self.epoch = epoch
        self.step = step
        self.objective = objective

    def to_record(self):
        rec = super().to_record()
        rec.update(epoch=self.epoch, step=self.step, objective=self.objective)
        return rec


class Inconclusive(WeakProperError):
    """No restart of a numeric minimization converged."""

    kind = "Inconclusive"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
