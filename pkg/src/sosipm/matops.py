"""Dense symmetric linear algebra used by the trackers and the oracles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPSDError, NumericError, SingularError, UpdateRejected

SPECTRAL_SLACK = 1e-9
# Inner Woodbury systems with a worse condition number are rejected.
WOODBURY_COND_MAX = 1e13


@dataclass(frozen=True)
class SpectralApprox:
    """The relation ``exp(-eps) A <= A_tilde <= exp(eps) A`` in Loewner order."""

    eps: float

    def holds(self, A, A_tilde) -> bool:
        return check_spectral_approx(A, A_tilde, self.eps)


def _symmetrize_checked(M, rtol=1e-10):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > rtol * max(scale, 1.0):
        raise ValueError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def sym_eig(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    M = _symmetrize_checked(M)
    try:
        return np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"symmetric eigensolver failed: {exc}") from exc


def psd_sqrt(M, tol=1e-10):
    """Symmetric square root of a PSD matrix.

    Eigenvalues down to ``-tol * ||M||_2`` are clamped to zero; anything more
    negative raises :class:`NotPSDError`.
    """
    w, Q = sym_eig(M)
    scale = max(abs(w[0]), abs(w[-1])) if w.size else 0.0
    if w.size and w[0] < -tol * scale:
        raise NotPSDError(f"matrix is not PSD (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (Q * np.sqrt(w)) @ Q.T


def psd_inv_sqrt(M):
    """``M^{-1/2}`` for a positive definite matrix."""
    w, Q = sym_eig(M)
    if not w.size or w[0] <= 0:
        raise NotPSDError("matrix is not positive definite")
    return (Q / np.sqrt(w)) @ Q.T


def woodbury_inverse_update(Ainv, Ucols, Vcols):
    """``(A + Ucols @ Vcols.T)^{-1}`` from ``Ainv = A^{-1}``."""
    Ainv = np.asarray(Ainv, dtype=float)
    Ucols = np.asarray(Ucols, dtype=float).reshape(Ainv.shape[0], -1)
    Vcols = np.asarray(Vcols, dtype=float).reshape(Ainv.shape[0], -1)
    k = Ucols.shape[1]
    if k == 0:
        return Ainv.copy()
    AU = Ainv @ Ucols
    VA = Vcols.T @ Ainv
    inner = np.eye(k) + Vcols.T @ AU
    return Ainv - AU @ solve_inner(inner, VA)


def solve_inner(inner, rhs):
    """Solve a small Woodbury capacitance system, rejecting near-singular ones."""
    if np.linalg.cond(inner) > WOODBURY_COND_MAX:
        raise UpdateRejected("Woodbury inner system is numerically singular")
    try:
        return np.linalg.solve(inner, rhs)
    except np.linalg.LinAlgError as exc:
        raise UpdateRejected(f"Woodbury inner system is singular: {exc}") from exc


def generalized_eigvals(A, A_tilde):
    """Eigenvalues of the pencil ``(A_tilde, A)`` for positive definite ``A``."""
    A = _symmetrize_checked(A, rtol=1e-8)
    A_tilde = _symmetrize_checked(A_tilde, rtol=1e-8)
    try:
        C = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SingularError("reference matrix is not positive definite") from exc
    W = scipy.linalg.solve_triangular(C, A_tilde, lower=True)
    W = scipy.linalg.solve_triangular(C, W.T, lower=True)
    return np.linalg.eigvalsh(0.5 * (W + W.T))


def check_spectral_approx(A, A_tilde, eps, slack=SPECTRAL_SLACK) -> bool:
    """True iff ``A_tilde`` is an ``eps``-spectral approximation of ``A``."""
    lam = generalized_eigvals(A, A_tilde)
    return bool(lam[0] >= np.exp(-eps) - slack and lam[-1] <= np.exp(eps) + slack)


def spectral_distance(A, A_tilde) -> float:
    """Smallest ``eps`` with ``A_tilde ~_eps A``."""
    lam = generalized_eigvals(A, A_tilde)
    if lam[0] <= 0:
        return np.inf
    return float(max(abs(np.log(lam[0])), abs(np.log(lam[-1]))))


def logdet_pd(M) -> float:
    """``log det M`` for positive definite ``M``, else ``None``.

    Goes through Cholesky because the sign of the determinant alone cannot
    tell a PD matrix from a negative definite one of even order.
    """
    try:
        C = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(C))))


def hadamard_square(M):
    M = np.asarray(M, dtype=float)
    return M * M
