"""Exception taxonomy shared by every latentswipe module.

All errors derive from :class:`LatentSwipeError` so callers can catch the
package's failures with a single except clause while still being able to
distinguish recoverable conditions (a diverged Newton solve, a stale
session iteration) from programming errors (dimension mismatches).
"""


class LatentSwipeError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(LatentSwipeError):
    """An array's shape is incompatible with the object it was passed to."""


class TooFewSamples(LatentSwipeError):
    """Not enough samples to fit the requested number of components."""


class DegenerateCovariance(LatentSwipeError):
    """Sample covariance has fewer usable directions than requested."""


class IllConditionedKernel(LatentSwipeError):
    """Kernel matrix stayed non-positive-definite after jitter escalation."""


class NewtonDivergence(LatentSwipeError):
    """Laplace mode search diverged; callers should fall back to the prior."""


class UnfittedModel(LatentSwipeError):
    """Posterior was requested from a model with unfitted observations."""


class NoArms(LatentSwipeError):
    """Bandit was created with zero arms."""


class InvalidArm(LatentSwipeError):
    """Arm index is outside the bandit's range."""


class SessionFinished(LatentSwipeError):
    """Feedback was submitted to a session that already used its budget."""


class ConfigMismatch(LatentSwipeError):
    """Replay inputs disagree with the log being replayed."""


class ReplayMismatch(ConfigMismatch):
    """Recomputed session state diverged from the logged record."""


class ExternalUnavailable(LatentSwipeError):
    """External generator could not be reached."""


class ExternalTimeout(LatentSwipeError):
    """External generator did not answer within the deadline."""
