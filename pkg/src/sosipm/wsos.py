"""Weighted sums of squares.

A WSOS cone is described by weights ``f_i`` (values at the points) with
evaluation matrices ``P_i``; its dual is ``{s : P_i^T diag(f_i o s) P_i >= 0
for all i}`` and the barrier is the sum of the per-block log-determinants.
The solve path reuses the block-aware barrier loop with one slack tracker per
block and a single stacked Woodbury step per iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ipm import IpmParams, block_gradient, block_hessian, check_conic_data, solve_blocks
from .polyspace import chebyshev_points, evaluate_basis


@dataclass(frozen=True, eq=False)
class WeightBlock:
    f: np.ndarray
    P: np.ndarray

    @property
    def L(self) -> int:
        return self.P.shape[1]


@dataclass(frozen=True, eq=False)
class WsosProgram:
    U: int
    weights: list
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        c = np.asarray(self.c, dtype=float).reshape(-1)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        weights = []
        for i, w in enumerate(self.weights):
            if not isinstance(w, WeightBlock):
                w = WeightBlock(*w)
            f = np.asarray(w.f, dtype=float).reshape(-1)
            P = np.atleast_2d(np.asarray(w.P, dtype=float))
            if f.shape != (self.U,) or P.shape[0] != self.U:
                raise ValueError(f"weight {i}: expected {self.U} values and {self.U} rows")
            if not np.all(np.isfinite(f)) or not np.all(np.isfinite(P)):
                raise ValueError(f"weight {i} contains NaN or Inf")
            if np.linalg.matrix_rank(P) < P.shape[1]:
                raise ValueError(f"weight {i}: P is not full column rank")
            weights.append(WeightBlock(f, P))
        if not weights:
            raise ValueError("at least one weight is required")
        object.__setattr__(self, "weights", weights)
        check_conic_data(A, b, c, self.U)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def L(self) -> int:
        return sum(w.L for w in self.weights)

    @property
    def blocks(self):
        return [(w.P, w.f) for w in self.weights]


def wsos_gradient_hessian(program: WsosProgram, y, eta):
    """Dense gradient and Hessian of ``-eta <b,y> - sum_i log det Lambda_i(c - A^T y)``."""
    y = np.asarray(y, dtype=float)
    g = block_gradient(program.A, program.b, program.c, program.blocks, y, eta)
    H = block_hessian(program.A, program.c, program.blocks, y)
    return g, H


def wsos_solve(program: WsosProgram, params: IpmParams | None = None):
    """Barrier method on the auxiliary system built over the block cone.

    The starting point is the same construction as in the unweighted case,
    applied to the summed block barrier.
    """
    return solve_blocks(program, params or IpmParams())


def interval_points(d: int) -> np.ndarray:
    return chebyshev_points(2 * d + 1).reshape(-1, 1)


def interval_weights(points, d: int) -> list:
    """Weights ``1`` (degree d squares) and ``1 - t^2`` (degree d-1 squares) on [-1, 1]."""
    t = np.asarray(points, dtype=float).reshape(-1)
    blocks = [WeightBlock(np.ones_like(t), evaluate_basis(t, 1, d))]
    if d >= 1:
        blocks.append(WeightBlock(1.0 - t * t, evaluate_basis(t, 1, d - 1)))
    return blocks
