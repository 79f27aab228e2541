"""Exception hierarchy.

Every error raised on bad caller input derives from :class:`InputError`
(also a ``ValueError``), which the command line maps to exit code 2.
:class:`InvariantViolation` signals an internal bug and maps to exit code 3.
"""


class ReleaseError(Exception):
    """Base class for all errors raised by this package."""


class InputError(ReleaseError, ValueError):
    """Raised when caller-supplied data violates a documented precondition."""


class InvariantViolation(ReleaseError, AssertionError):
    """Raised when an internal consistency check fails."""


# pool
class EmptyInput(InputError):
    pass


class NoNegatives(InputError):
    pass


class NonFiniteScore(InputError):
    pass


class EmptyHeldout(InputError):
    pass


class MalformedPoolFile(InputError):
    pass


class IoFailure(InputError):
    pass


# evidence
class BadEta(InputError):
    pass


class BadTrunc(InputError):
    pass


class BadInput(InputError):
    pass


class BadAlpha(InputError):
    pass


class NonPositiveEValue(InputError):
    pass


class EmptyStream(InputError):
    pass


# baselines
class MissingEntropy(InputError):
    pass


class EmptyDistribution(InputError):
    pass


class NegativeMass(InputError):
    pass


# gain
class MissingLabel(InputError):
    pass


# oracles
class DegenerateInputs(InputError):
    pass


class BadC(InputError):
    pass


class BadZMax(InputError):
    pass


class BadConfig(InputError):
    pass


class TooLarge(InputError):
    pass


class BadDistribution(InputError):
    pass


# trajectory files and cohorts
class MalformedRecord(InputError):
    pass


class StepGap(InputError):
    pass


class DuplicateStep(InputError):
    pass


class UnlabeledTrajectory(InputError):
    pass
