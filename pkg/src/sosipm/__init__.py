"""Interior point solver for sum-of-squares programs in an interpolant basis."""

from .errors import (ConeExitError, NotPSDError, NumericError, ProblemFormatError, SingularError,
                     SizeError, SosError, UnisolvenceError, UpdateRejected)
from .frontend_io import (interval_min_frontend, lower_bound_frontend, parse_problem,
                          serialize_problem)
from .ipm import IpmParams, IpmTrace, Solution, SosProgram, solve
from .polyspace import InterpolantBasis, build_basis, make_dims
from .wsos import WsosProgram, wsos_solve

__version__ = "0.1.0"

__all__ = [
    "ConeExitError", "NotPSDError", "NumericError", "ProblemFormatError", "SingularError",
    "SizeError", "SosError", "UnisolvenceError", "UpdateRejected",
    "interval_min_frontend", "lower_bound_frontend", "parse_problem", "serialize_problem",
    "IpmParams", "IpmTrace", "Solution", "SosProgram", "solve",
    "InterpolantBasis", "build_basis", "make_dims",
    "WsosProgram", "wsos_solve",
]
