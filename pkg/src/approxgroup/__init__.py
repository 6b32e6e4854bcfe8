"""Computational toolkit for approximate groups in concrete nilpotent and free groups."""
from .errors import (
    ApproxGroupError,
    CapExceeded,
    ContextMismatch,
    HypothesisViolation,
    SpecError,
    UnsupportedOperation,
)
from .groups import Element, Homomorphism, make_context, simple_commutator
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "ApproxGroupError",
    "BACKEND",
    "CapExceeded",
    "ContextMismatch",
    "Element",
    "Homomorphism",
    "HypothesisViolation",
    "SpecError",
    "UnsupportedOperation",
    "make_context",
    "simple_commutator",
]
