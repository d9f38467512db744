"""Exception types raised across the package."""


class CausalCombineError(Exception):
    """Base class for all package errors."""


class SingularMoment(CausalCombineError):
    """A moment (Gram) matrix is rank deficient or too ill-conditioned to invert."""


class DimensionMismatch(CausalCombineError, ValueError):
    """Array shapes that must agree do not."""


class DegenerateWeight(CausalCombineError):
    """A weight formula has a vanishing denominator."""


class InsufficientData(CausalCombineError, ValueError):
    """Too few rows for the requested operation (e.g. a CV fold is empty)."""


class ExcessiveFailures(CausalCombineError):
    """More than the allowed fraction of Monte Carlo trials failed."""


class NoConvergence(UserWarning):
    """Issued when an iterative solver stops at ``max_iter`` before meeting ``tol``."""
