"""Problem files and polynomial frontends.

Problem files are JSON documents tagged ``"schema": "sosipm-problem/1"``.
Floats may be JSON numbers or C99 hex strings (``"0x1.8p+1"``); both decode
to the exact binary64 value, and serialization writes the shortest
round-tripping decimal. Polynomials are given either as power-basis
coefficient lists (univariate) or as maps from comma-separated exponent
tuples to coefficients.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ProblemFormatError
from .ipm import SosProgram
from .polyspace import InterpolantBasis, PolyDims, build_basis, evaluate_basis, make_dims
from .wsos import WeightBlock, WsosProgram, interval_points, interval_weights

PROBLEM_SCHEMA = "sosipm-problem/1"
RESULT_SCHEMA = "sosipm-result/1"
KINDS = ("sos", "wsos", "raw")
FRONTENDS = ("lower_bound", "interval")
PARAM_KEYS = ("delta", "eps_N", "eps_S", "R")


@dataclass(eq=False)
class ProblemFile:
    kind: str
    n: int | None = None
    d: int | None = None
    points: np.ndarray | None = None
    P: np.ndarray | None = None
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    c: np.ndarray | None = None
    weights: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    frontend: dict | None = None
    schema: str = PROBLEM_SCHEMA

    def __eq__(self, other):
        if not isinstance(other, ProblemFile):
            return NotImplemented
        return serialize_problem(self) == serialize_problem(other)


# Decoding -----------------------------------------------------------------

def _reject_constant(name):
    raise ValueError(f"non-finite literal {name}")


def _float(v, where):
    if isinstance(v, bool):
        raise ProblemFormatError(f"{where}: expected a number, got a boolean")
    if isinstance(v, (int, float)):
        x = float(v)
    elif isinstance(v, str):
        try:
            x = float.fromhex(v) if v.strip().lower().lstrip("+-").startswith("0x") else float(v)
        except ValueError:
            raise ProblemFormatError(f"{where}: cannot parse {v!r} as a number") from None
    else:
        raise ProblemFormatError(f"{where}: expected a number, got {type(v).__name__}")
    if not math.isfinite(x):
        raise ProblemFormatError(f"{where}: NaN or Inf is not allowed")
    return x


def _vector(v, where, length=None):
    if not isinstance(v, list):
        raise ProblemFormatError(f"{where}: expected a list")
    out = np.array([_float(x, f"{where}[{i}]") for i, x in enumerate(v)], dtype=float)
    if length is not None and out.shape[0] != length:
        raise ProblemFormatError(f"{where}: expected length {length}, got {out.shape[0]}")
    return out


def _matrix(v, where, cols=None):
    if not isinstance(v, list) or not v:
        raise ProblemFormatError(f"{where}: expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(v):
        r = _vector(row, f"{where}[{i}]")
        if rows and r.shape[0] != rows[0].shape[0]:
            raise ProblemFormatError(f"{where}[{i}]: row length {r.shape[0]} differs from "
                                     f"row 0 length {rows[0].shape[0]}")
        rows.append(r)
    M = np.vstack(rows)
    if cols is not None and M.shape[1] != cols:
        raise ProblemFormatError(f"{where}: expected {cols} columns, got {M.shape[1]}")
    return M


def _int(v, where, minimum=1):
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ProblemFormatError(f"{where}: expected an integer >= {minimum}")
    return v


def parse_problem(data, path=None) -> ProblemFile:
    """Decode and validate a problem document."""
    try:
        if isinstance(data, (bytes, bytearray)):
            data = data.decode("utf-8")
        doc = json.loads(data, parse_constant=_reject_constant)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ProblemFormatError(f"invalid JSON: {exc}", path=path) from None
    try:
        return _from_doc(doc)
    except ProblemFormatError as exc:
        if path:
            raise ProblemFormatError(str(exc), path=path) from None
        raise


def _from_doc(doc) -> ProblemFile:
    if not isinstance(doc, dict):
        raise ProblemFormatError("top level must be an object")
    if doc.get("schema") != PROBLEM_SCHEMA:
        raise ProblemFormatError(f"schema: expected {PROBLEM_SCHEMA!r}, got {doc.get('schema')!r}")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise ProblemFormatError(f"kind: expected one of {KINDS}, got {kind!r}")
    known = {"schema", "kind", "n", "d", "points", "P", "A", "b", "c", "weights", "params",
             "frontend"}
    extra = sorted(set(doc) - known)
    if extra:
        raise ProblemFormatError(f"unknown field(s): {', '.join(extra)}")

    pf = ProblemFile(kind=kind)
    if kind == "raw":
        if "P" not in doc:
            raise ProblemFormatError("P: required for kind 'raw'")
        pf.P = _matrix(doc["P"], "P")
        U = pf.P.shape[0]
        if pf.P.shape[1] > U:
            raise ProblemFormatError(f"P: more columns ({pf.P.shape[1]}) than rows ({U})")
        for key in ("n", "d"):
            if key in doc:
                setattr(pf, key, _int(doc[key], key))
    else:
        pf.n = _int(doc.get("n"), "n")
        pf.d = _int(doc.get("d"), "d")
        if kind == "wsos" and pf.n != 1 and "points" not in doc:
            raise ProblemFormatError("points: required for multivariate wsos problems")
        if kind == "wsos":
            U = 2 * pf.d + 1 if pf.n == 1 and "points" not in doc else None
        else:
            U = make_dims(pf.n, pf.d).U
        if "points" in doc:
            pts = _matrix(doc["points"], "points", cols=pf.n)
            if U is not None and pts.shape[0] != U:
                raise ProblemFormatError(f"points: expected {U} points, got {pts.shape[0]}")
            pf.points = pts
            U = pts.shape[0]
        if "P" in doc:
            raise ProblemFormatError("P: only allowed for kind 'raw'")

    if "weights" in doc:
        if kind != "wsos":
            raise ProblemFormatError("weights: only allowed for kind 'wsos'")
        if not isinstance(doc["weights"], list) or not doc["weights"]:
            raise ProblemFormatError("weights: expected a non-empty list")
        for i, w in enumerate(doc["weights"]):
            if not isinstance(w, dict) or set(w) != {"values", "d"}:
                raise ProblemFormatError(f"weights[{i}]: expected keys 'values' and 'd'")
            pf.weights.append({"values": _vector(w["values"], f"weights[{i}].values", U),
                               "d": _int(w["d"], f"weights[{i}].d", minimum=0)})

    if "params" in doc:
        params = doc["params"]
        if not isinstance(params, dict):
            raise ProblemFormatError("params: expected an object")
        for key, v in params.items():
            if key not in PARAM_KEYS:
                raise ProblemFormatError(f"params.{key}: unknown parameter")
            pf.params[key] = _float(v, f"params.{key}")

    if "frontend" in doc:
        fe = doc["frontend"]
        if not isinstance(fe, dict) or fe.get("kind") not in FRONTENDS:
            raise ProblemFormatError(f"frontend.kind: expected one of {FRONTENDS}")
        if kind == "raw":
            raise ProblemFormatError("frontend: not allowed for kind 'raw'")
        if fe["kind"] == "interval" and (pf.n != 1 or kind != "wsos"):
            raise ProblemFormatError("frontend: interval mode needs kind 'wsos' with n=1")
        if fe["kind"] == "lower_bound" and kind != "sos":
            raise ProblemFormatError("frontend: lower_bound mode needs kind 'sos'")
        if set(fe) - {"kind", "f_values", "poly"} or ("f_values" in fe) == ("poly" in fe):
            raise ProblemFormatError("frontend: give exactly one of 'f_values' or 'poly'")
        pf.frontend = {"kind": fe["kind"]}
        if "f_values" in fe:
            pf.frontend["f_values"] = _vector(fe["f_values"], "frontend.f_values", U)
        else:
            pf.frontend["poly"] = parse_poly(fe["poly"], pf.n, pf.d)
        for key in ("A", "b", "c"):
            if key in doc:
                raise ProblemFormatError(f"{key}: not allowed together with a frontend")
        return pf

    for key in ("A", "b", "c"):
        if key not in doc:
            raise ProblemFormatError(f"{key}: required")
    pf.A = _matrix(doc["A"], "A", cols=U)
    U = pf.A.shape[1]
    m = pf.A.shape[0]
    if m > U:
        raise ProblemFormatError(f"A: m={m} rows exceed U={U}")
    pf.b = _vector(doc["b"], "b", m)
    pf.c = _vector(doc["c"], "c", U)
    if kind == "raw" and U != pf.P.shape[0]:
        raise ProblemFormatError(f"A: expected {pf.P.shape[0]} columns, got {U}")
    return pf


# Encoding -----------------------------------------------------------------

def _num(x):
    return float(x)


def serialize_problem(pf: ProblemFile) -> bytes:
    doc = {"schema": pf.schema, "kind": pf.kind}
    for key in ("n", "d"):
        if getattr(pf, key) is not None:
            doc[key] = int(getattr(pf, key))
    for key in ("points", "P", "A"):
        M = getattr(pf, key)
        if M is not None:
            doc[key] = [[_num(v) for v in row] for row in np.atleast_2d(M)]
    for key in ("b", "c"):
        v = getattr(pf, key)
        if v is not None:
            doc[key] = [_num(x) for x in v]
    if pf.weights:
        doc["weights"] = [{"values": [_num(x) for x in w["values"]], "d": int(w["d"])}
                          for w in pf.weights]
    if pf.params:
        doc["params"] = {k: _num(v) for k, v in sorted(pf.params.items())}
    if pf.frontend is not None:
        fe = {"kind": pf.frontend["kind"]}
        if "f_values" in pf.frontend:
            fe["f_values"] = [_num(x) for x in pf.frontend["f_values"]]
        else:
            fe["poly"] = format_poly(pf.frontend["poly"])
        doc["frontend"] = fe
    return (json.dumps(doc, indent=1, allow_nan=False) + "\n").encode("utf-8")


# Polynomials ----------------------------------------------------------------

def parse_poly(spec, n, d=None) -> dict:
    """Parse a polynomial into ``{exponent tuple: coefficient}``.

    Accepts a power-basis coefficient list or a comma string like ``"3,2,1"``
    (univariate, constant term first), or a map ``{"2,0": 1.0, ...}``.
    """
    if isinstance(spec, str):
        parts = [p for p in spec.replace(" ", "").split(",")]
        spec = [_float(p, f"poly[{i}]") for i, p in enumerate(parts)]
    terms = {}
    if isinstance(spec, list):
        if n != 1:
            raise ProblemFormatError("poly: coefficient lists are univariate; use a map")
        for k, v in enumerate(spec):
            coef = _float(v, f"poly[{k}]")
            if coef != 0.0:
                terms[(k,)] = coef
    elif isinstance(spec, dict):
        for key, v in spec.items():
            try:
                alpha = tuple(int(a) for a in str(key).split(","))
            except ValueError:
                raise ProblemFormatError(f"poly: bad exponent key {key!r}") from None
            if len(alpha) != n or min(alpha) < 0:
                raise ProblemFormatError(f"poly: exponent {key!r} needs {n} nonnegative entries")
            coef = _float(v, f"poly[{key!r}]")
            if coef != 0.0:
                terms[alpha] = terms.get(alpha, 0.0) + coef
    else:
        raise ProblemFormatError("poly: expected a coefficient list or an exponent map")
    if d is not None:
        deg = poly_degree(terms)
        if deg > 2 * d:
            raise ProblemFormatError(f"poly: degree {deg} exceeds 2d = {2 * d}")
    return terms


def poly_degree(terms) -> int:
    return max((sum(a) for a in terms), default=0)


def format_poly(terms) -> dict:
    return {",".join(str(a) for a in alpha): float(v) for alpha, v in sorted(terms.items())}


def evaluate_poly(terms, points) -> np.ndarray:
    """Evaluate at ``points`` of shape (N, n); a 1-d array is read as N univariate points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    out = np.zeros(pts.shape[0])
    for alpha, coef in terms.items():
        out += coef * np.prod(pts ** np.asarray(alpha, dtype=float), axis=1)
    return out


# Frontends ------------------------------------------------------------------

def orthonormal_complement_of_ones(U: int) -> np.ndarray:
    """(U-1) x U matrix with orthonormal rows spanning the complement of ``1_U``.

    Rows 2..U of the Householder reflector that sends ``e_1`` to ``1_U/sqrt(U)``.
    """
    v = np.full(U, 1.0 / math.sqrt(U))
    v[0] -= 1.0
    H = np.eye(U) - 2.0 * np.outer(v, v) / (v @ v)
    return H[1:]


@dataclass(frozen=True, eq=False)
class Reduction:
    """A program whose primal variable is ``x = f - gamma 1`` plus the decode map."""

    program: object
    f_values: np.ndarray

    def gamma(self, x) -> float:
        """``gamma = mean(f) - <c, x>`` with ``c = 1/U``."""
        return float(np.mean(self.f_values) - self.program.c @ np.asarray(x, dtype=float))


def _affine_data(f_values):
    f = np.asarray(f_values, dtype=float).reshape(-1)
    U = f.shape[0]
    A = orthonormal_complement_of_ones(U)
    return f, A, A @ f, np.full(U, 1.0 / U)


def lower_bound_frontend(f_values, basis: InterpolantBasis) -> Reduction:
    """``max gamma s.t. f - gamma 1 is SOS`` as ``min <1/U, x> s.t. Ax = Af, x SOS``."""
    f, A, b, c = _affine_data(f_values)
    if f.shape[0] != basis.U:
        raise ValueError(f"expected {basis.U} values, got {f.shape[0]}")
    return Reduction(SosProgram(basis, A, b, c), f)


def interval_min_frontend(f_values, basis, weights) -> Reduction:
    """Same encoding with ``x`` in the weighted cone given by ``weights``.

    ``basis`` only supplies the point count; ``weights`` are ``WeightBlock``s
    or ``(values, P)`` pairs.
    """
    f, A, b, c = _affine_data(f_values)
    U = basis.U if hasattr(basis, "U") else int(basis)
    return Reduction(WsosProgram(U, list(weights), A, b, c), f)


def interval_basis(d: int) -> InterpolantBasis:
    pts = interval_points(d)
    dims = make_dims(1, d)
    return build_basis(dims, points=pts)


# Problem file -> program --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LoadedProblem:
    program: object
    reduction: Reduction | None
    params: dict


def build_program(pf: ProblemFile, seed: int | None = 0) -> LoadedProblem:
    """Turn a parsed file into a solvable program (and its frontend decode)."""
    if pf.kind == "raw":
        U, L = pf.P.shape
        basis = InterpolantBasis(PolyDims(pf.n or 0, pf.d or 0, L, U), np.zeros((U, 0)), pf.P)
        return LoadedProblem(SosProgram(basis, pf.A, pf.b, pf.c), None, dict(pf.params))

    if pf.kind == "sos":
        basis = build_basis(make_dims(pf.n, pf.d), seed=seed, points=pf.points)
        if pf.frontend is not None:
            f = _frontend_values(pf, basis.points)
            red = lower_bound_frontend(f, basis)
            return LoadedProblem(red.program, red, dict(pf.params))
        return LoadedProblem(SosProgram(basis, pf.A, pf.b, pf.c), None, dict(pf.params))

    # wsos
    pts = pf.points if pf.points is not None else interval_points(pf.d)
    if pf.weights:
        weights = [WeightBlock(w["values"], evaluate_basis(pts, pf.n, w["d"])) for w in pf.weights]
    elif pf.n == 1:
        weights = interval_weights(pts, pf.d)
    else:
        raise ProblemFormatError("weights: required for multivariate wsos problems")
    U = pts.shape[0]
    if pf.frontend is not None:
        f = _frontend_values(pf, pts)
        red = interval_min_frontend(f, U, weights)
        return LoadedProblem(red.program, red, dict(pf.params))
    return LoadedProblem(WsosProgram(U, weights, pf.A, pf.b, pf.c), None, dict(pf.params))


def _frontend_values(pf, points):
    if "f_values" in pf.frontend:
        return pf.frontend["f_values"]
    return evaluate_poly(pf.frontend["poly"], points)
