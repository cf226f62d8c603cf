"""Exception types shared across the package."""


class SpincmError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateSpectrum(SpincmError):
    """Eigenvalues or singular values collide (or vanish where forbidden)."""


class ConstraintViolation(SpincmError):
    """A state is off the moment-map constraint surface or breaks a row-norm constraint."""


class PhaseFixFailure(SpincmError):
    """A spin row is numerically zero, so its phase cannot be fixed."""


class DimensionMismatch(SpincmError):
    """Two states do not belong to the same family / dimensions."""


class ChamberBoundary(SpincmError):
    """An integrated trajectory left the regular (Weyl-chamber) region.

    Carries the exit time in ``exit_time``.
    """

    def __init__(self, message, exit_time=None):
        super().__init__(message)
        self.exit_time = exit_time


class StepSizeUnderflow(SpincmError):
    """The adaptive integrator failed to make progress."""


class UnbalancedWord(SpincmError):
    """A trace word has unequal counts of Z and Z-dagger letters."""


class RankUnstable(SpincmError):
    """The singular-value spectrum has no clear gap at the rank cut."""


class EvaluationFailure(SpincmError):
    """A user-supplied callback failed to evaluate."""


class ConfigError(SpincmError):
    """An experiment configuration document is malformed."""
