"""Exception and warning types shared across wavemor."""


class WavemorError(Exception):
    """Base class for all errors raised by wavemor."""


class ConfigurationError(WavemorError):
    """A scenario file or configuration dict is malformed or inconsistent."""


class UsageError(WavemorError):
    """An operation was called with arguments that violate its contract."""


class SingularOperatorError(WavemorError):
    """A factorization or solve hit a numerically singular matrix."""


class SingularModelError(WavemorError):
    """A reduced model has a (near-)zero eigenvalue and cannot be evaluated."""


class DefectiveMatrixError(WavemorError):
    """An eigendecomposition-based matrix function met a defective matrix."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class BranchCutError(DefectiveMatrixError):
    """Principal square root undefined: defective eigenvalue on the cut."""


class BreakdownError(WavemorError):
    """The complex-orthogonal recurrence hit an isotropic vector.

    Carries the step index at which |<v, v>| fell below the breakdown
    threshold and, when available, the last valid prefix basis.
    """

    def __init__(self, message, step=None, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial


class AccuracyWarning(UserWarning):
    """A requested tolerance is probably not met (estimate attached)."""


class BranchChoiceWarning(UserWarning):
    """A principal square root was taken right next to its branch cut."""


class NearSingularWarning(UserWarning):
    """A shift is close to an eigenvalue; the result may be inaccurate."""
