"""Maintenance of ``T = S_tilde^{-1}`` and the approximate Hessian inverse ``N``.

``N = (A (P T P^T)^{o2} A^T)^{-1}``. A rank-r change of ``S_tilde`` moves
``P T P^T`` by a rank-r term; its Hadamard square then moves by a term of
rank at most ``(L + r) r`` built from diagonal scalings, and ``N`` follows by
one Woodbury step of that size.

Blocks are ``(P_i, f_i)`` pairs; ``f_i is None`` means unit weights. Flop
counters tally multiply-accumulates of the dense kernels analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularError, UpdateRejected
from .matops import solve_inner

# Multiply-accumulate constant for a dense symmetric eigendecomposition.
EIGH_COST = 9


@dataclass
class HessianInvState:
    """``T`` is an L x L array for one block, or a list of arrays for WSOS."""

    T: np.ndarray | list
    N: np.ndarray
    flops: int = 0


def refresh_flops(Ls, U, m):
    f = 0
    for L in Ls:
        f += L**3 + U * L * L + U * U * L + U * U
    return f + m * U * U + m * m * U + m**3


def update_flops(Ls, rs, U, m):
    f = 0
    k = 0
    for L, r in zip(Ls, rs):
        if r == 0:
            continue
        f += 3 * L * L * r + 2 * L * r * r + r**3
        f += U * L * L + 2 * U * L * r + 2 * U * (L + r) * r
        k += (L + r) * r
    if k:
        f += 2 * m * U * k + 3 * m * m * k + 2 * m * k * k + k**3
    return f


def low_rank_flops(Ls, rs=None):
    rs = rs or [0] * len(Ls)
    f = 0
    for L, r in zip(Ls, rs):
        f += 2 * EIGH_COST * L**3 + 3 * L**3
        if r:
            f += L**3 + L * L * r
    return f


def spd_inverse(M, what="matrix"):
    M = 0.5 * (M + M.T)
    try:
        c = scipy.linalg.cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularError(f"{what} is not numerically positive definite") from exc
    piv = np.abs(np.diag(c[0]))
    # Squared pivot ratio is a cheap lower estimate of the condition number.
    if (piv.min() / piv.max()) ** 2 <= M.shape[0] * np.finfo(float).eps:
        raise SingularError(f"{what} is numerically singular")
    inv = scipy.linalg.cho_solve(c, np.eye(M.shape[0]))
    return 0.5 * (inv + inv.T)


def dense_hessian(blocks, A, Ts):
    """``A (sum_i (f_i f_i^T) o (P_i T_i P_i^T)^{o2}) A^T``."""
    K = None
    for (P, f), T in zip(blocks, Ts):
        M = P @ T @ P.T
        M = M * M
        if f is not None:
            M = np.outer(f, f) * M
        K = M if K is None else K + M
    return A @ K @ A.T


def full_refresh(basis_or_P, A, S_tilde) -> HessianInvState:
    """Dense recompute of ``T`` and ``N`` from ``S_tilde``."""
    P = getattr(basis_or_P, "P", basis_or_P)
    A = np.asarray(A, dtype=float)
    T = spd_inverse(S_tilde, "approximate slack")
    H = dense_hessian([(P, None)], A, [T])
    N = spd_inverse(H, "Hessian (is A full row rank?)")
    return HessianInvState(T=T, N=N, flops=refresh_flops([T.shape[0]], P.shape[0], A.shape[0]))


def full_refresh_wsos(blocks, A, S_tilde_blocks) -> HessianInvState:
    A = np.asarray(A, dtype=float)
    Ts = [spd_inverse(S, f"approximate slack block {i}") for i, S in enumerate(S_tilde_blocks)]
    H = dense_hessian(blocks, A, Ts)
    N = spd_inverse(H, "Hessian (is A full row rank?)")
    U = blocks[0][0].shape[0]
    return HessianInvState(T=Ts, N=N, flops=refresh_flops([T.shape[0] for T in Ts], U, A.shape[0]))


def inverse_factors(T, V1, V2):
    """Step 1: ``(V1_bar, V2_bar)`` with ``T + V1_bar V2_bar^T = (T^{-1} + V1 V2^T)^{-1}``."""
    TV1 = T @ V1
    inner = np.eye(V1.shape[1]) + V2.T @ TV1
    # V1_bar = -T V1 (I + V2^T T V1)^{-1}
    V1_bar = -solve_inner(inner.T, TV1.T).T
    V2_bar = T @ V2
    return V1_bar, V2_bar


def hadamard_factors(P, T, V1_bar, V2_bar, f=None):
    """Step 2: ``(Y, Z)`` with ``(P T_new P^T)^{o2} - (P T P^T)^{o2} = Y Z^T``.

    With weights ``f`` both sides carry the factor ``f f^T`` entrywise.
    """
    PV1 = P @ V1_bar
    PV2 = P @ V2_bar
    Yp = np.hstack([2.0 * (P @ T), PV1])
    Zp = np.hstack([P, PV2])
    if f is not None:
        Yp = f[:, None] * Yp
        Zp = f[:, None] * Zp
    U, w = Yp.shape
    r = PV1.shape[1]
    Y = (PV1[:, :, None] * Yp[:, None, :]).reshape(U, r * w)
    Z = (PV2[:, :, None] * Zp[:, None, :]).reshape(U, r * w)
    return Y, Z


def _woodbury_N(N, A, Y, Z):
    AY = A @ Y
    AZ = A @ Z
    NAY = N @ AY
    AZtN = AZ.T @ N
    inner = np.eye(Y.shape[1]) + AZ.T @ NAY
    N_new = N - NAY @ solve_inner(inner, AZtN)
    return 0.5 * (N_new + N_new.T)


def update_hessian_inv(state: HessianInvState, basis_or_P, A, V1, V2) -> HessianInvState:
    """Woodbury update of ``(T, N)`` after ``S_tilde <- S_tilde + V1 V2^T``.

    Raises :class:`UpdateRejected` when an inner system is singular; the
    caller should fall back to :func:`full_refresh`.
    """
    P = getattr(basis_or_P, "P", basis_or_P)
    A = np.asarray(A, dtype=float)
    if V1 is None or V1.shape[1] == 0:
        return HessianInvState(T=state.T, N=state.N, flops=state.flops)
    T = state.T
    L, r = V1.shape
    if L * r > P.shape[0]:
        raise UpdateRejected(f"update rank {r} violates L*r <= U ({L}*{r} > {P.shape[0]})")
    V1_bar, V2_bar = inverse_factors(T, V1, V2)
    T_new = T + V1_bar @ V2_bar.T
    Y, Z = hadamard_factors(P, T, V1_bar, V2_bar)
    N_new = _woodbury_N(state.N, A, Y, Z)
    flops = state.flops + update_flops([L], [r], P.shape[0], A.shape[0])
    return HessianInvState(T=0.5 * (T_new + T_new.T), N=N_new, flops=flops)


def update_hessian_inv_wsos(state: HessianInvState, blocks, A, updates) -> HessianInvState:
    """Blockwise variant: one stacked Woodbury step on ``N`` for all blocks.

    ``updates`` holds ``(V1_i, V2_i)`` per block; empty factors leave a block
    untouched.
    """
    A = np.asarray(A, dtype=float)
    Ts_new, Ys, Zs, Ls, rs = [], [], [], [], []
    for (P, f), T, (V1, V2) in zip(blocks, state.T, updates):
        Ls.append(T.shape[0])
        if V1 is None or V1.shape[1] == 0:
            Ts_new.append(T)
            rs.append(0)
            continue
        V1_bar, V2_bar = inverse_factors(T, V1, V2)
        T_new = T + V1_bar @ V2_bar.T
        Ts_new.append(0.5 * (T_new + T_new.T))
        Y, Z = hadamard_factors(P, T, V1_bar, V2_bar, f)
        Ys.append(Y)
        Zs.append(Z)
        rs.append(V1.shape[1])
    if not Ys:
        return HessianInvState(T=list(state.T), N=state.N, flops=state.flops)
    Y = np.hstack(Ys)
    Z = np.hstack(Zs)
    N_new = _woodbury_N(state.N, A, Y, Z)
    U = blocks[0][0].shape[0]
    flops = state.flops + update_flops(Ls, rs, U, A.shape[0])
    return HessianInvState(T=Ts_new, N=N_new, flops=flops)
