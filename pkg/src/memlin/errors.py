"""Exceptions and warnings shared across the package."""


class MemlinError(Exception):
    """Base class for all library-level failures."""


# --- dataset ---------------------------------------------------------------

class MagicMismatchError(MemlinError):
    pass


class TruncatedError(MemlinError):
    pass


class SampleTooLargeError(MemlinError):
    pass


class DimensionMismatchError(MemlinError):
    pass


class TrailingBytesWarning(UserWarning):
    """Payload longer than the header promises; extra bytes are ignored."""


# --- operators --------------------------------------------------------------

class InvalidRankError(MemlinError):
    pass


class NoConvergenceWarning(UserWarning):
    """Iterative estimate did not meet its tolerance; best value returned."""


# --- prior -----------------------------------------------------------------

class NonFiniteInputError(MemlinError):
    pass


class OverflowRiskError(MemlinError):
    pass


class DimensionTooLargeError(MemlinError):
    pass


# --- solver / recovery ------------------------------------------------------

class NegativeInputError(MemlinError):
    pass


class EmptySupportError(MemlinError):
    pass


class InvalidGammaError(MemlinError):
    pass


class ZeroReferenceError(MemlinError):
    pass


# --- noise -------------------------------------------------------------------

class InvalidProbabilityError(MemlinError):
    pass


# --- diagnostics --------------------------------------------------------------

class RankDeficientError(MemlinError):
    pass


class BoundViolatedError(MemlinError):
    """An unconditional bound failed; carries the offending report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
