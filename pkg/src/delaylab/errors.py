"""Exception types shared across the package.

Every rejectable input condition has its own class so callers (and the CLI
exit-code mapping) can react without string matching.
"""


class DelayLabError(Exception):
    """Base class for all package errors."""


# -- schedule ---------------------------------------------------------------

class ScheduleError(DelayLabError):
    pass


class NonIncreasingTimes(ScheduleError):
    pass


class FirstTimeNotZero(ScheduleError):
    pass


class NonPositiveDelay(ScheduleError):
    pass


class HorizonBeyondSchedule(ScheduleError):
    pass


class TimeOutOfRange(ScheduleError):
    pass


# -- system -----------------------------------------------------------------

class SystemError_(DelayLabError):
    pass


class DimensionMismatch(SystemError_):
    pass


class GramNotPositiveDefinite(SystemError_):
    pass


class NotDissipative(SystemError_):
    pass


class FeedbackSignViolation(SystemError_):
    """Anti-damping operator with negative symmetric part."""


class MissingFeedbackOp(SystemError_):
    """More odd intervals than stored feedback operators, cycling disabled."""


# -- semigroup --------------------------------------------------------------

class EnvelopeError(DelayLabError):
    pass


class NotExponentiallyStable(EnvelopeError):
    pass


class DefectiveEigenbasis(EnvelopeError):
    pass


class IntervalTooShort(EnvelopeError):
    """Requested contraction over an interval not longer than the crossover time."""


class EnvelopeNotVerified(EnvelopeError):
    """A pinned envelope fails its verification grid."""


# -- integrator -------------------------------------------------------------

class IntegratorError(DelayLabError):
    pass


class StepNotAligned(IntegratorError):
    pass


class MissingHistory(IntegratorError):
    pass


class HorizonExceeded(IntegratorError):
    pass


class LookupBeforeHistory(IntegratorError):
    pass


# -- monitor ----------------------------------------------------------------

class WindowUnderflow(DelayLabError):
    """Lyapunov window reaches below t=0 with nonzero weight and no history."""


# -- certificates -----------------------------------------------------------

class CertificateError(DelayLabError):
    pass


class PreconditionUnmet(CertificateError):
    pass


class InconsistentTailDeclaration(CertificateError):
    pass


# -- models -----------------------------------------------------------------

class ModelError(DelayLabError):
    pass


class NonPositiveDecay(ModelError):
    pass


class KernelMassExceedsOne(ModelError):
    pass


class TruncationTooShort(ModelError):
    pass


class BadSubinterval(ModelError):
    pass


# -- cli --------------------------------------------------------------------

class ConfigError(DelayLabError):
    pass


class UnknownAxis(ConfigError):
    pass
