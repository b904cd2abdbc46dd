"""Sums of gcd and lcm functions over tuples of integers, exact and fast."""

from .errors import (
    ConsistencyError,
    ConvergenceError,
    DependencyError,
    FitError,
    GlsumsError,
    RangeError,
    ResourceError,
    UsageError,
    VerificationError,
)
from .numkit import Numeric, build_sieve, constant
from .tuple_sums import SumRequest, SumResult, compute

__all__ = [
    "ConsistencyError", "ConvergenceError", "DependencyError", "FitError", "GlsumsError",
    "Numeric", "RangeError", "ResourceError", "SumRequest", "SumResult", "UsageError",
    "VerificationError", "build_sieve", "compute", "constant",
]
