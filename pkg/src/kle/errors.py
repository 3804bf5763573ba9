"""Exception hierarchy shared by every module of the package."""


class KLEError(Exception):
    """Base class for all errors raised by :mod:`kle`."""


class DimensionError(KLEError, ValueError):
    """Array shapes or dimensions are inconsistent."""


class NotSPDError(KLEError, ValueError):
    """A matrix expected to be symmetric positive definite is not."""


class SingularEllipsoidError(KLEError, ValueError):
    """A Jacobian lacks full row rank, so J J^T is singular."""


class DegenerateError(KLEError, ValueError):
    """Input is degenerate for the requested statistic (zero spread, zero resultant...)."""


class EmptyNeighborhoodError(KLEError):
    """All kernel weights underflowed at a query point."""


class ConvergenceError(KLEError):
    """An iterative solver failed to converge.

    The best iterate found so far is kept in ``best`` so that callers can
    still report something sensible.
    """

    def __init__(self, message, best=None, n_iter=None):
        super().__init__(message)
        self.best = best
        self.n_iter = n_iter


class SingularIterateError(ConvergenceError):
    """A fixed-point iterate lost positive definiteness."""


class SchemaError(KLEError, ValueError):
    """A JSON document does not match its schema.

    ``pointer`` is the JSON pointer of the offending location.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class FitFailedError(KLEError):
    """Every query point of a regression failed."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []
