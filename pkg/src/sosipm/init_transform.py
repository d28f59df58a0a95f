"""Auxiliary system with a known, exactly centered starting point.

For ``min <c,x>  s.t.  Ax = b, x in K`` with ``||x||_1 <= R`` on the feasible
set, the auxiliary program

    A_bar = [[A, 0, b/R - A g0], [1^T, 1, 0]]
    b_bar = [b/R; 1 + <1, g0>]
    c_bar = [(delta/||c||_inf) c; 0; 1]

lives on ``K x R_+ x R_+``. The triple
``x0 = [g0; 1; 1], y0 = [0; -1], s0 = [1 + (delta/||c||_inf) c; 1; 1]`` is
feasible and ``x0`` is the barrier gradient map of ``s0``, so ``(y0, eta=1)``
sits exactly on the central path.

Programs are duck-typed: anything with ``A``, ``b``, ``c`` and ``blocks``,
a list of ``(P_i, f_i)`` pairs (``f_i=None`` for unit weights). The two
appended coordinates are attached to the first block as ``diag(P_0, 1, 1)``
so that the whole auxiliary cone is again described by blocks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConeExitError
from .matops import logdet_pd


@dataclass(frozen=True, eq=False)
class AuxProgram:
    A_bar: np.ndarray
    b_bar: np.ndarray
    c_bar: np.ndarray
    P_bar: np.ndarray
    blocks: list
    R: float
    delta: float
    g0: np.ndarray
    c_scale: float

    @property
    def nu(self) -> int:
        return sum(P.shape[1] for P, _ in self.blocks)

    @property
    def U(self) -> int:
        return self.A_bar.shape[1] - 2

    @property
    def m(self) -> int:
        return self.A_bar.shape[0] - 1


@dataclass(frozen=True)
class ExtractBounds:
    objective: float
    objective_slack: float
    feasibility_residual: float
    feasibility_bound: float


def cone_gradient(blocks, s) -> np.ndarray:
    """``sum_i f_i o diag(P_i Lambda_i(s)^{-1} P_i^T)``, the negated barrier gradient in s."""
    g = np.zeros(s.shape[0])
    for i, (P, f) in enumerate(blocks):
        fs = s if f is None else f * s
        w, Q = np.linalg.eigh(P.T @ (fs[:, None] * P))
        if not w[0] > 0:
            raise ConeExitError(f"slack block {i} is not positive definite", block=i)
        W = (P @ Q) / np.sqrt(w)
        d = np.einsum("ij,ij->i", W, W)
        g += d if f is None else f * d
    return g


def extend_blocks(blocks, U):
    """Blocks for ``K x R_+ x R_+``: ``diag(P_0, 1, 1)`` then zero-padded ``P_i``."""
    out = []
    for i, (P, f) in enumerate(blocks):
        L = P.shape[1]
        if i == 0:
            Pb = np.zeros((U + 2, L + 2))
            Pb[:U, :L] = P
            Pb[U, L] = 1.0
            Pb[U + 1, L + 1] = 1.0
            fb = None if f is None else np.concatenate([f, [1.0, 1.0]])
        else:
            Pb = np.vstack([P, np.zeros((2, L))])
            fb = np.concatenate([np.ones(U) if f is None else f, [0.0, 0.0]])
        out.append((Pb, fb))
    return out


def build_aux(program, R: float, delta: float):
    """Return ``(aux, y0, s0)``."""
    A = np.asarray(program.A, dtype=float)
    b = np.asarray(program.b, dtype=float)
    c = np.asarray(program.c, dtype=float)
    m, U = A.shape
    c_inf = float(np.max(np.abs(c))) if c.size else 0.0
    if c_inf == 0.0:
        raise ValueError("objective c is zero; rescale the objective")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")

    c_scale = delta / c_inf
    s_top = 1.0 + c_scale * c
    g0 = cone_gradient(program.blocks, s_top)

    A_bar = np.zeros((m + 1, U + 2))
    A_bar[:m, :U] = A
    A_bar[:m, U + 1] = b / R - A @ g0
    A_bar[m, :U] = 1.0
    A_bar[m, U] = 1.0
    b_bar = np.concatenate([b / R, [1.0 + g0.sum()]])
    c_bar = np.concatenate([c_scale * c, [0.0, 1.0]])

    blocks = extend_blocks(program.blocks, U)
    aux = AuxProgram(A_bar=A_bar, b_bar=b_bar, c_bar=c_bar, P_bar=blocks[0][0],
                     blocks=blocks, R=float(R), delta=float(delta), g0=g0, c_scale=c_scale)
    y0 = np.concatenate([np.zeros(m), [-1.0]])
    s0 = np.concatenate([s_top, [1.0, 1.0]])
    return aux, y0, s0


def initial_primal(aux: AuxProgram) -> np.ndarray:
    return np.concatenate([aux.g0, [1.0, 1.0]])


def aux_barrier(aux: AuxProgram, s_bar) -> float:
    """``-sum_i log det(P_bar_i^T diag(f_i o s_bar) P_bar_i)``."""
    val = 0.0
    for P, f in aux.blocks:
        fs = s_bar if f is None else f * s_bar
        logdet = logdet_pd(P.T @ (fs[:, None] * P))
        if logdet is None:
            return np.inf
        val -= logdet
    return val


def product_barrier(program, s_bar) -> float:
    """Barrier of the original cone at ``s_bar[:U]`` minus the logs of the two extras."""
    U = s_bar.shape[0] - 2
    val = 0.0
    for P, f in program.blocks:
        s = s_bar[:U]
        fs = s if f is None else f * s
        logdet = logdet_pd(P.T @ (fs[:, None] * P))
        if logdet is None:
            return np.inf
        val -= logdet
    if s_bar[U] <= 0 or s_bar[U + 1] <= 0:
        return np.inf
    return val - np.log(s_bar[U]) - np.log(s_bar[U + 1])


def extract(aux: AuxProgram, x_bar, program):
    """Map an auxiliary primal point back: ``x = R * x_bar[:U]``.

    Also returns the a-priori bounds ``<c,x> <= OPT + delta R ||c||_inf`` and
    ``||Ax - b||_1 <= 8 delta L (L R ||A|| + ||b||_1)``, with ``||A||`` the
    largest absolute column sum and ``L`` the barrier parameter of the cone.
    """
    A = np.asarray(program.A, dtype=float)
    b = np.asarray(program.b, dtype=float)
    c = np.asarray(program.c, dtype=float)
    U = A.shape[1]
    x = aux.R * np.asarray(x_bar, dtype=float)[:U]
    L = sum(P.shape[1] for P, _ in program.blocks)
    A_norm = float(np.max(np.abs(A).sum(axis=0))) if A.size else 0.0
    bounds = ExtractBounds(
        objective=float(c @ x),
        objective_slack=aux.delta * aux.R * float(np.max(np.abs(c))),
        feasibility_residual=float(np.abs(A @ x - b).sum()),
        feasibility_bound=8.0 * aux.delta * L * (L * aux.R * A_norm + float(np.abs(b).sum())),
    )
    return x, bounds
