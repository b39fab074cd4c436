"""Exception hierarchy shared by all patchlr modules.

The CLI maps these onto process exit codes: InvalidArgumentError -> 2,
NumericalError (and subclasses) -> 3, FormatError -> 4.
"""


class PatchlrError(Exception):
    """Base class for all patchlr errors."""


class InvalidArgumentError(PatchlrError, ValueError):
    """Bad argument or malformed input value (non-finite data, shape
    mismatch, out-of-range parameter)."""


class NumericalError(PatchlrError, RuntimeError):
    """Numerical failure (SVD breakdown, NaN detected in an iterate)."""


class IndefiniteSystemError(NumericalError):
    """CG detected non-positive curvature: the system is not SPD."""


class SingularSystemError(NumericalError):
    """Linear system has no unique solution (e.g. an unknown region with
    no connection to any known value)."""


class ConvergenceError(NumericalError):
    """Iteration budget exhausted before reaching the requested tolerance.

    Carries the best iterate so callers can inspect or accept it.
    """

    def __init__(self, message, iterate=None, residual=None, iterations=None):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations


class FormatError(PatchlrError, ValueError):
    """Malformed file contents. ``offset`` is the byte offset at which
    parsing failed, when known."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
