"""Brute-force references for checking the maintained quantities.

Nothing here reuses the trackers or the barrier loop; only the basis
primitives are shared. Inverses go through LU, not Cholesky, so a defect in
one factorization path does not hide in both.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularError
from .polyspace import lambda_of


def _P(basis_or_P):
    return np.asarray(getattr(basis_or_P, "P", basis_or_P), dtype=float)


def dense_hessian(basis_or_P, A, S, f=None) -> np.ndarray:
    """``A ((f f^T) o (P S^{-1} P^T)^{o2}) A^T`` by direct evaluation."""
    P = _P(basis_or_P)
    A = np.asarray(A, dtype=float)
    K = (P @ np.linalg.solve(S, P.T)) ** 2
    if f is not None:
        K = np.outer(f, f) * K
    return A @ K @ A.T


def dense_hessian_inverse(basis_or_P, A, S_tilde, f=None) -> np.ndarray:
    """``(A (P S_tilde^{-1} P^T)^{o2} A^T)^{-1}``."""
    return _inverse(dense_hessian(basis_or_P, A, S_tilde, f))


def dense_wsos_hessian_inverse(blocks, A, S_tildes) -> np.ndarray:
    """Blockwise sum of weighted Hessian terms, then inverted."""
    H = sum(dense_hessian(P, A, S, f) for (P, f), S in zip(blocks, S_tildes))
    return _inverse(H)


def _inverse(H):
    try:
        Hinv = np.linalg.inv(H)
    except np.linalg.LinAlgError as exc:
        raise SingularError(f"Hessian is singular: {exc}") from exc
    if not np.all(np.isfinite(Hinv)):
        raise SingularError("Hessian inverse is not finite")
    return Hinv


def dual_membership(basis_or_P, s, f=None) -> bool:
    """Whether ``P^T diag(f o s) P`` is PSD up to ``1e-9`` relative."""
    s = np.asarray(s, dtype=float)
    M = lambda_of(basis_or_P, s if f is None else f * s)
    w = np.linalg.eigvalsh(0.5 * (M + M.T))
    scale = np.max(np.abs(w)) if w.size else 0.0
    return bool(w[0] >= -1e-9 * scale)


def barrier_value(blocks, A, b, c, y, eta) -> float:
    """``-eta <b,y> - sum_i log det(P_i^T diag(f_i o s) P_i)``; ``inf`` outside the cone."""
    y = np.asarray(y, dtype=float)
    s = np.asarray(c, dtype=float) - np.asarray(A, dtype=float).T @ y
    val = -eta * float(np.asarray(b, dtype=float) @ y)
    for P, f in blocks:
        fs = s if f is None else f * s
        # sign of det alone misses even-dimensional negative definite blocks
        try:
            C = np.linalg.cholesky(P.T @ np.diag(fs) @ P)
        except np.linalg.LinAlgError:
            return np.inf
        val -= 2.0 * np.sum(np.log(np.diag(C)))
    return val


def finite_diff_gradient(fn, y, h=1e-6) -> np.ndarray:
    """Central differences of a scalar function."""
    y = np.asarray(y, dtype=float)
    g = np.empty_like(y)
    for i in range(y.shape[0]):
        e = np.zeros_like(y)
        e[i] = h
        g[i] = (fn(y + e) - fn(y - e)) / (2.0 * h)
    return g


def finite_diff_jacobian(fn, y, h=1e-6) -> np.ndarray:
    """Central-difference Jacobian of a vector function, one column per coordinate."""
    y = np.asarray(y, dtype=float)
    cols = []
    for i in range(y.shape[0]):
        e = np.zeros_like(y)
        e[i] = h
        cols.append((np.asarray(fn(y + e)) - np.asarray(fn(y - e))) / (2.0 * h))
    return np.column_stack(cols)


def grid_min(fn, domain, resolution) -> float:
    """Minimum of ``fn`` over a uniform grid.

    Univariate: ``domain = (lo, hi)`` and ``resolution`` points. Bivariate:
    ``domain = ((lo1, hi1), (lo2, hi2))`` with ``resolution`` points per axis.
    ``fn`` takes an array of shape (N, n).
    """
    dom = np.asarray(domain, dtype=float)
    if dom.ndim == 1:
        t = np.linspace(dom[0], dom[1], int(resolution))
        return float(np.min(fn(t[:, None])))
    if dom.shape != (2, 2):
        raise ValueError("grid_min supports one or two variables")
    u = np.linspace(dom[0, 0], dom[0, 1], int(resolution))
    v = np.linspace(dom[1, 0], dom[1, 1], int(resolution))
    X, Y = np.meshgrid(u, v, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return float(np.min(fn(pts)))
