"""Exception hierarchy.

Hypothesis violations are legitimate mathematical outcomes (the CLI maps
them to exit status 2); ``VerificationFailure`` signals an implementation
bug (exit status 3).
"""
from __future__ import annotations


class ApproxGroupError(Exception):
    """Base class for all errors raised by the package."""


class SpecError(ApproxGroupError, ValueError):
    """Malformed or unsupported group/set/family description."""


class ContextMismatch(ApproxGroupError, ValueError):
    """Operands belong to different group contexts."""


class CapExceeded(ApproxGroupError):
    """An enumeration would materialize more elements than the context cap."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class UnsupportedOperation(ApproxGroupError):
    """The operation is not available for this kind of context."""


class HypothesisViolation(ApproxGroupError):
    """A mathematical precondition fails on the given input."""

    def __init__(self, message, witness=None, index=None):
        super().__init__(message)
        self.witness = witness
        self.index = index


class NotNilpotent(HypothesisViolation):
    """The generated group is not nilpotent."""


class SearchExhausted(ApproxGroupError):
    """A bounded search found nothing within its caps."""


class FamilyExhausted(HypothesisViolation):
    """No member of a quotient family satisfies the kernel condition."""


class VerificationFailure(ApproxGroupError):
    """A produced certificate failed its own verification (a bug flag)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
