"""Interpolant basis for n-variate polynomials of degree at most 2d.

Coordinates of a degree-2d polynomial are its values at U unisolvent points.
Columns of the evaluation matrix ``P`` hold a basis of the degree-d space, so
the dual-cone operator takes the form ``Lambda(s) = P.T @ diag(s) @ P``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.polynomial import chebyshev

from .errors import SizeError, UnisolvenceError

BASIS_KINDS = ("chebyshev", "monomial")
RCOND_MIN = 1e-10
_INT64_MAX = np.iinfo(np.int64).max


@dataclass(frozen=True)
class PolyDims:
    n: int
    d: int
    L: int
    U: int


def make_dims(n: int, d: int) -> PolyDims:
    """Dimensions ``L = C(n+d, d)`` and ``U = C(n+2d, 2d)``."""
    if int(n) != n or int(d) != d or n < 1 or d < 1:
        raise ValueError(f"n and d must be positive integers, got n={n}, d={d}")
    n, d = int(n), int(d)
    L = math.comb(n + d, d)
    U = math.comb(n + 2 * d, 2 * d)
    if U > _INT64_MAX:
        raise SizeError(f"U = C({n + 2 * d}, {2 * d}) does not fit in a 64-bit index")
    return PolyDims(n=n, d=d, L=L, U=U)


def exponents(n: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices of total degree <= ``degree`` in graded lexicographic order.

    For n=2, degree=2 this is (0,0), (1,0), (0,1), (2,0), (1,1), (0,2).
    """
    out = []
    for k in range(degree + 1):
        level = [a for a in itertools.product(range(k + 1), repeat=n) if sum(a) == k]
        level.sort(reverse=True)
        out.extend(level)
    return out


def evaluate_basis(points, n: int, degree: int, kind: str = "chebyshev") -> np.ndarray:
    """Evaluate the degree-``degree`` product basis at ``points``.

    Returns an array of shape (len(points), C(n+degree, degree)).
    """
    if kind not in BASIS_KINDS:
        raise ValueError(f"unknown basis kind {kind!r}")
    pts = np.asarray(points, dtype=float).reshape(-1, n)
    if kind == "chebyshev":
        per_axis = [chebyshev.chebvander(pts[:, j], degree) for j in range(n)]
    else:
        per_axis = [np.vander(pts[:, j], degree + 1, increasing=True) for j in range(n)]
    cols = []
    for alpha in exponents(n, degree):
        col = np.ones(pts.shape[0])
        for j, a in enumerate(alpha):
            if a:
                col = col * per_axis[j][:, a]
        cols.append(col)
    return np.column_stack(cols)


def chebyshev_points(count: int) -> np.ndarray:
    """Chebyshev extreme points on [-1, 1] in ascending order."""
    if count == 1:
        return np.zeros(1)
    k = np.arange(count)
    return -np.cos(k * np.pi / (count - 1))


@dataclass(frozen=True, eq=False)
class InterpolantBasis:
    dims: PolyDims
    points: np.ndarray
    P: np.ndarray
    basis_kind: str = "chebyshev"
    rcond: float = 1.0

    @property
    def L(self) -> int:
        return self.dims.L

    @property
    def U(self) -> int:
        return self.dims.U

    def evaluate(self, poly) -> np.ndarray:
        """Values of a callable ``poly(points) -> array`` at the basis points."""
        return np.asarray(poly(self.points), dtype=float).reshape(self.U)


def _fekete_points(n: int, d: int, U: int, seed: int | None) -> np.ndarray:
    side = chebyshev_points(2 * d + 1)
    grid = np.array(list(itertools.product(side, repeat=n)))
    if seed:
        grid = grid[np.random.default_rng(seed).permutation(len(grid))]
    V = evaluate_basis(grid, n, 2 * d)
    # Column-pivoted QR on V.T picks well-conditioned rows of V greedily.
    _, _, piv = scipy.linalg.qr(V.T, mode="economic", pivoting=True)
    chosen = np.sort(piv[:U])
    return grid[chosen]


def interpolation_rcond(points, n: int, degree: int) -> float:
    W = evaluate_basis(points, n, degree)
    if W.shape[0] != W.shape[1]:
        return 0.0
    s = np.linalg.svd(W, compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0


def build_basis(dims: PolyDims, seed: int | None = 0, basis_kind: str = "chebyshev",
                points=None) -> InterpolantBasis:
    """Build points and the evaluation matrix ``P`` (U x L).

    Univariate bases use the U Chebyshev extreme points. For n >= 2 the
    points are approximate Fekete points chosen from a tensor Chebyshev grid
    with ``2d + 1`` nodes per axis. ``seed`` permutes the candidate grid
    before pivoting; ``0``/``None`` keeps the natural order. Explicit
    ``points`` bypass the selection but are still checked for unisolvence.
    """
    n, d, U = dims.n, dims.d, dims.U
    if points is not None:
        pts = np.asarray(points, dtype=float).reshape(U, n)
    elif n == 1:
        pts = chebyshev_points(U).reshape(U, 1)
    else:
        pts = _fekete_points(n, d, U, seed)

    rcond = interpolation_rcond(pts, n, 2 * d)
    if not rcond > RCOND_MIN:
        raise UnisolvenceError(
            f"degree-{2 * d} interpolation matrix is singular at the chosen points "
            f"(rcond={rcond:.3e})", rcond=rcond)

    P = evaluate_basis(pts, n, d, basis_kind)
    if np.linalg.matrix_rank(P) < dims.L:
        raise UnisolvenceError("evaluation matrix P is rank deficient", rcond=rcond)
    return InterpolantBasis(dims=dims, points=pts, P=P, basis_kind=basis_kind, rcond=rcond)


def lambda_of(basis_or_P, s) -> np.ndarray:
    """``P.T @ diag(s) @ P``."""
    P = _as_P(basis_or_P)
    s = np.asarray(s, dtype=float)
    if s.shape != (P.shape[0],):
        raise ValueError(f"s has shape {s.shape}, expected ({P.shape[0]},)")
    return P.T @ (s[:, None] * P)


def lambda_adjoint(basis_or_P, V) -> np.ndarray:
    """Adjoint of :func:`lambda_of`: ``diag(P @ V @ P.T)``."""
    P = _as_P(basis_or_P)
    V = np.asarray(V, dtype=float)
    return np.einsum("ij,jk,ik->i", P, V, P)


def _as_P(basis_or_P) -> np.ndarray:
    if isinstance(basis_or_P, InterpolantBasis):
        return basis_or_P.P
    return np.asarray(basis_or_P, dtype=float)
