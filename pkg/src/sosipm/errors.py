"""Exception hierarchy shared across the solver."""


class SosError(Exception):
    """Base class for all solver errors."""


class SizeError(SosError, ValueError):
    """Requested polynomial space is too large to index."""


class UnisolvenceError(SosError):
    """Point set does not determine degree-2d polynomials uniquely."""

    def __init__(self, message, rcond=None):
        super().__init__(message)
        self.rcond = rcond


class NumericError(SosError):
    """A dense kernel failed (eigensolver, factorization)."""


class NotPSDError(NumericError):
    """Matrix has a significantly negative eigenvalue."""


class SingularError(NumericError):
    """Matrix is numerically singular."""


class UpdateRejected(NumericError):
    """Inner Woodbury system is singular; caller should do a dense refresh."""


class ConeExitError(SosError):
    """Slack left the interior of the dual cone."""

    def __init__(self, message, block=None, trace=None):
        super().__init__(message)
        self.block = block
        self.trace = trace


class ProblemFormatError(SosError, ValueError):
    """Problem file is malformed or inconsistent."""

    def __init__(self, message, path=None):
        if path:
            message = f"{path}: {message}"
        super().__init__(message)
        self.path = path
