"""Lazy spectral approximation of the slack matrix.

Keeps ``S_tilde`` within ``exp(+-eps_S)`` of the exact slack ``S = Lambda(s)``
by correcting only the eigendirections of ``S^{-1/2} S_tilde S^{-1/2} - I``
that drifted, and signalling a full refresh once the correction rank
reaches ``cutoff = U / L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConeExitError, NumericError

NO_CHANGE = "nochange"
LOW_RANK = "lowrank"
FULL_REFRESH = "refresh"


def drift_threshold(eps_S: float) -> float:
    """Largest ``|lambda|`` treated as settled.

    ``1 - exp(-eps_S)`` (slightly below ``eps_S``) so that every settled
    eigenvalue ``1 + lambda`` lies inside ``[exp(-eps_S), exp(eps_S)]``.
    """
    return -math.expm1(-eps_S)


@dataclass
class SlackState:
    S_tilde: np.ndarray
    eps_S: float = 0.009
    cutoff: float = 1.0
    log_dim: int | None = None

    def __post_init__(self):
        if not 0 < self.eps_S < 0.01:
            raise ValueError(f"eps_S must lie in (0, 0.01), got {self.eps_S}")
        if self.log_dim is None:
            self.log_dim = self.S_tilde.shape[0]


@dataclass
class UpdateOutcome:
    kind: str
    S_tilde: np.ndarray
    V1: np.ndarray | None = None
    V2: np.ndarray | None = None
    rank_charged: int = 0
    max_drift: float = 0.0


@dataclass
class BlockUpdateOutcome:
    kind: str
    S_tilde: list
    V1: list = field(default_factory=list)
    V2: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    rank_charged: int = 0
    max_drift: float = 0.0


def _pd_eig(S, block=None):
    S = 0.5 * (S + S.T)
    try:
        w, Q = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed on slack matrix: {exc}") from exc
    if not w[0] > 0:
        where = "" if block is None else f" (block {block})"
        raise ConeExitError(f"slack matrix is not positive definite{where}: "
                            f"min eigenvalue {w[0]:.3e}", block=block)
    return w, Q


def choose_rank(abs_sorted, thr, cutoff, log_dim):
    """Doubling rule on magnitudes sorted in descending order.

    Returns 0 when nothing drifted past ``thr``, otherwise the (even) rank
    the rule settles on; a result ``>= cutoff`` means refresh.
    """
    count = abs_sorted.shape[0]

    def at(k):
        return abs_sorted[k - 1] if k <= count else 0.0

    if at(1) <= thr:
        return 0
    decay = 1.0 - 1.0 / math.log(log_dim) if log_dim > 2 else None
    r = 1
    while 2 * r <= cutoff and (at(2 * r) > thr or (decay is not None and at(2 * r) > decay * at(r))):
        r += 1
    return 2 * r


def _drift(w, Q, S_tilde):
    inv_sqrt = (Q / np.sqrt(w)) @ Q.T
    Z = inv_sqrt @ S_tilde @ inv_sqrt
    Z = 0.5 * (Z + Z.T) - np.eye(Z.shape[0])
    lam, X = np.linalg.eigh(Z)
    return lam, X


def low_rank_update(S_new, state: SlackState, eig=None) -> UpdateOutcome:
    """One lazy update of ``state.S_tilde`` towards ``S_new``.

    ``eig`` may carry a precomputed ``(w, Q)`` eigendecomposition of
    ``S_new``. The state is not mutated; apply the returned ``S_tilde``.
    """
    w, Q = eig if eig is not None else _pd_eig(S_new)
    if not w[0] > 0:
        raise ConeExitError(f"slack matrix is not positive definite: min eigenvalue {w[0]:.3e}")
    lam, X = _drift(w, Q, state.S_tilde)
    abs_lam = np.abs(lam)
    order = np.argsort(-abs_lam, kind="stable")
    abs_sorted = abs_lam[order]
    thr = drift_threshold(state.eps_S)
    r = choose_rank(abs_sorted, thr, state.cutoff, state.log_dim)
    max_drift = float(abs_sorted[0])
    if r == 0:
        return UpdateOutcome(NO_CHANGE, state.S_tilde, rank_charged=0, max_drift=max_drift)
    r_eff = min(r, lam.shape[0])
    if r >= state.cutoff or (r_eff < lam.shape[0] and abs_sorted[r_eff] > thr):
        return UpdateOutcome(FULL_REFRESH, 0.5 * (S_new + S_new.T),
                             rank_charged=math.ceil(state.cutoff), max_drift=max_drift)
    sel = order[:r_eff]
    sqrt_S = (Q * np.sqrt(w)) @ Q.T
    V2 = sqrt_S @ X[:, sel]
    V1 = V2 * (-lam[sel])
    S_tilde = state.S_tilde + V1 @ V2.T
    return UpdateOutcome(LOW_RANK, S_tilde, V1=V1, V2=V2, rank_charged=r_eff,
                         max_drift=max_drift)


def low_rank_update_blocks(S_new_blocks, S_tilde_blocks, eps_S, cutoff, log_dim,
                           eigs=None) -> BlockUpdateOutcome:
    """The lazy update applied to ``blockdiag(S_new_blocks)`` without forming it.

    Eigenvalues of the per-block drift matrices are pooled for the global
    sort and the global rank rule; the selected directions are then read
    back per block.
    """
    k = len(S_new_blocks)
    factors = []
    lams, Xs, offsets = [], [], [0]
    for i in range(k):
        w, Q = eigs[i] if eigs is not None else _pd_eig(S_new_blocks[i], block=i)
        if not w[0] > 0:
            raise ConeExitError(f"slack block {i} is not positive definite", block=i)
        lam, X = _drift(w, Q, S_tilde_blocks[i])
        factors.append((w, Q))
        lams.append(lam)
        Xs.append(X)
        offsets.append(offsets[-1] + lam.shape[0])
    pooled = np.concatenate(lams)
    abs_lam = np.abs(pooled)
    order = np.argsort(-abs_lam, kind="stable")
    abs_sorted = abs_lam[order]
    thr = drift_threshold(eps_S)
    r = choose_rank(abs_sorted, thr, cutoff, log_dim)
    max_drift = float(abs_sorted[0])
    if r == 0:
        return BlockUpdateOutcome(NO_CHANGE, list(S_tilde_blocks), ranks=[0] * k,
                                  max_drift=max_drift)
    total = pooled.shape[0]
    r_eff = min(r, total)
    if r >= cutoff or (r_eff < total and abs_sorted[r_eff] > thr):
        return BlockUpdateOutcome(FULL_REFRESH, [0.5 * (S + S.T) for S in S_new_blocks],
                                  ranks=[0] * k, rank_charged=math.ceil(cutoff),
                                  max_drift=max_drift)
    block_of = np.searchsorted(offsets, order[:r_eff], side="right") - 1
    new_blocks, V1s, V2s, ranks = [], [], [], []
    for i in range(k):
        local = order[:r_eff][block_of == i] - offsets[i]
        if local.size == 0:
            new_blocks.append(S_tilde_blocks[i])
            V1s.append(np.zeros((lams[i].shape[0], 0)))
            V2s.append(np.zeros((lams[i].shape[0], 0)))
            ranks.append(0)
            continue
        w, Q = factors[i]
        sqrt_S = (Q * np.sqrt(w)) @ Q.T
        V2 = sqrt_S @ Xs[i][:, local]
        V1 = V2 * (-lams[i][local])
        new_blocks.append(S_tilde_blocks[i] + V1 @ V2.T)
        V1s.append(V1)
        V2s.append(V2)
        ranks.append(int(local.size))
    return BlockUpdateOutcome(LOW_RANK, new_blocks, V1=V1s, V2=V2s, ranks=ranks,
                              rank_charged=r_eff, max_drift=max_drift)
