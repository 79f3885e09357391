"""Exception and warning types raised across the toolkit."""


class TrimonError(Exception):
    """Base class for all toolkit errors."""


class NumericalError(TrimonError):
    """Base class for failures of a numerical routine (CLI exit status 3)."""


class ValidationError(TrimonError, ValueError):
    """Input failed a schema or physical-sanity check (CLI exit status 2)."""


class NonPositiveDefinite(NumericalError):
    pass


class UnknownTransition(ValidationError, KeyError):
    pass


class InconsistentLedger(NumericalError):
    pass


class StepTooCoarse(NumericalError):
    pass


class NegativeDephasing(ValidationError):
    pass


class FrequencyCollision(ValidationError):
    pass


class ZeroDetuning(ValidationError, ZeroDivisionError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class FitFailure(NumericalError):
    pass


class InvalidOrdering(ValidationError):
    pass


class InsufficientShots(NumericalError):
    pass


class SingularConfusion(NumericalError):
    pass


class OptimizerStall(NumericalError):
    pass


class InconsistentGrid(ValidationError):
    pass


class NonPSDInput(NumericalError):
    pass


class DegenerateSpectrum(UserWarning):
    """Two nonzero normal-mode frequencies coincide."""


class AsymmetryWarning(UserWarning):
    """Circuit is outside the near-symmetric regime of the closed-form charging energies."""
