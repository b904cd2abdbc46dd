"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class GlsumsError(Exception):
    exit_code = 2


class UsageError(GlsumsError, ValueError):
    """Bad arguments: empty lists, unknown names, inconsistent limits."""

    exit_code = 1


class RangeError(UsageError):
    """Argument outside the table or sieve range it refers to."""


class ResourceError(GlsumsError):
    """Tuple budget, memory cap or exact-mode cap exceeded."""

    exit_code = 2


class ConvergenceError(GlsumsError):
    exit_code = 2


class FitError(ConvergenceError):
    """Least-squares problem too ill-conditioned to trust."""


class DependencyError(GlsumsError):
    """A main term needs a constant that was not supplied."""

    exit_code = 2


class ConsistencyError(GlsumsError, AssertionError):
    """Two independent evaluations of the same quantity disagree."""

    exit_code = 3


class VerificationError(GlsumsError):
    exit_code = 3

    def __init__(self, message, lhs=None, rhs=None):
        super().__init__(message)
        self.lhs = lhs
        self.rhs = rhs
