"""Short-step barrier method with a lazily maintained Hessian inverse.

Each iteration takes the Newton step ``dy = -N g`` on
``F_eta(y) = -eta <b, y> - sum_i log det Lambda_i(c - A^T y)``, raises ``eta``
by the factor ``1 + alpha``, and then brings ``S_tilde`` and ``N`` up to date
through the slack tracker and the Hessian tracker. The gradient is always
evaluated at the exact slack.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import hessian_tracker as ht
from . import slack_tracker as st
from .errors import ConeExitError, SizeError, UpdateRejected
from .init_transform import build_aux, extract
from .matops import logdet_pd, spectral_distance
from .polyspace import InterpolantBasis

EPS_N_DEFAULT = 0.01
EPS_N_MAX = 0.05


@dataclass(frozen=True, eq=False)
class SosProgram:
    """``min <c,x> s.t. Ax = b, x in SOS`` and its dual ``max <b,y> s.t. c - A^T y in SOS*``."""

    basis: InterpolantBasis
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
        check_conic_data(A, b, c, self.basis.U)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def U(self) -> int:
        return self.A.shape[1]

    @property
    def L(self) -> int:
        return self.basis.L

    @property
    def blocks(self):
        return [(self.basis.P, None)]


def check_conic_data(A, b, c, U):
    m = A.shape[0]
    if A.shape[1] != U:
        raise SizeError(f"A has {A.shape[1]} columns, expected U={U}")
    if b.shape != (m,):
        raise SizeError(f"b has length {b.shape[0]}, expected m={m}")
    if c.shape != (U,):
        raise SizeError(f"c has length {c.shape[0]}, expected U={U}")
    if m > U:
        raise SizeError(f"m={m} constraints exceed U={U}")
    for name, arr in (("A", A), ("b", b), ("c", c)):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{name} contains NaN or Inf")
    if m and np.linalg.matrix_rank(A) < m:
        raise ValueError("A does not have full row rank")


@dataclass
class IpmParams:
    delta: float = 1e-3
    eps_N: float = EPS_N_DEFAULT
    eps_S: float = 0.009
    R: float | None = None
    naive_mode: bool = False
    # Record dense-oracle diagnostics each iteration (slow; for testing).
    monitor: bool = False
    # Stop once the auxiliary duality gap drops below delta**2 (extension).
    early_exit: bool = False
    # Hard cap on iterations; None runs the full schedule.
    max_iter: int | None = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0 < self.eps_N < EPS_N_MAX:
            raise ValueError(f"eps_N must lie in (0, {EPS_N_MAX}), got {self.eps_N}")
        if self.eps_N > EPS_N_DEFAULT:
            warnings.warn(f"eps_N={self.eps_N} exceeds {EPS_N_DEFAULT}; "
                          "the convergence guarantee assumes eps_N <= 0.01", stacklevel=2)
        if not 0 < self.eps_S < 0.01:
            raise ValueError(f"eps_S must lie in (0, 0.01), got {self.eps_S}")
        if self.R is not None and not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")

    def step_factor(self, nu):
        return self.eps_N / (20.0 * math.sqrt(nu))

    def budget(self, nu):
        return math.ceil(40.0 / self.eps_N * math.sqrt(nu) * math.log(nu / self.delta))


_MONITOR_FIELDS = ("step_norm", "drift_norm", "centrality", "slack_eps", "hessian_eps")


@dataclass
class IpmTrace:
    """Per-iteration record. ``flops_*`` are per-iteration counts."""

    nu: int = 0
    alpha: float = 0.0
    budget: int = 0
    eta: list = field(default_factory=list)
    kind: list = field(default_factory=list)
    rank_charged: list = field(default_factory=list)
    refresh: list = field(default_factory=list)
    flops_maintained: list = field(default_factory=list)
    flops_naive_estimate: list = field(default_factory=list)
    newton_norm_proxy: list = field(default_factory=list)
    rejected: int = 0
    monitor: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return len(self.eta)

    def records(self):
        mon = self.monitor
        for i in range(self.iterations):
            rec = {
                "iter": i + 1,
                "eta": self.eta[i],
                "kind": self.kind[i],
                "rank_charged": self.rank_charged[i],
                "refresh_flag": self.refresh[i],
                "flops_maintained": self.flops_maintained[i],
                "flops_naive_estimate": self.flops_naive_estimate[i],
                "newton_norm_proxy": self.newton_norm_proxy[i],
            }
            for key in mon:
                rec[key] = mon[key][i]
            yield rec

    def rank_histogram(self) -> dict:
        hist = {}
        for r in self.rank_charged:
            hist[r] = hist.get(r, 0) + 1
        return dict(sorted(hist.items()))


@dataclass
class Solution:
    y: np.ndarray
    s: np.ndarray
    x: np.ndarray
    gap_bound: float
    feasibility_residual: float
    feasibility_bound: float = np.inf
    objective: float = np.nan
    aux_gap: float = np.nan
    certified: bool = False
    eta: float = 1.0
    iterations: int = 0
    y_bar: np.ndarray | None = None
    s_bar: np.ndarray | None = None
    x_bar: np.ndarray | None = None


def slack_blocks(blocks, s):
    out = []
    for P, f in blocks:
        fs = s if f is None else f * s
        out.append(P.T @ (fs[:, None] * P))
    return out


def _eval_blocks(blocks, s):
    """Slack blocks, their eigendecompositions and ``sum_i f_i o diag(P_i S_i^{-1} P_i^T)``."""
    Ss, eigs = [], []
    d_sum = np.zeros(s.shape[0])
    for i, (P, f) in enumerate(blocks):
        fs = s if f is None else f * s
        S = P.T @ (fs[:, None] * P)
        w, Q = np.linalg.eigh(S)
        if not w[0] > 0:
            raise ConeExitError(f"slack block {i} is not positive definite "
                                f"(min eigenvalue {w[0]:.3e})", block=i)
        W = (P @ Q) / np.sqrt(w)
        d = np.einsum("ij,ij->i", W, W)
        d_sum += d if f is None else f * d
        Ss.append(S)
        eigs.append((w, Q))
    return Ss, eigs, d_sum


def block_gradient(A, b, c, blocks, y, eta):
    s = c - A.T @ y
    _, _, d = _eval_blocks(blocks, s)
    return -eta * b + A @ d


def block_hessian(A, c, blocks, y):
    s = c - A.T @ y
    Ss, eigs, _ = _eval_blocks(blocks, s)
    return _hessian_from_eigs(A, blocks, eigs)


def _hessian_from_eigs(A, blocks, eigs):
    K = None
    for (P, f), (w, Q) in zip(blocks, eigs):
        W = (P @ Q) / np.sqrt(w)
        M = W @ W.T
        M = M * M
        if f is not None:
            M = np.outer(f, f) * M
        K = M if K is None else K + M
    H = A @ K @ A.T
    return 0.5 * (H + H.T)


def block_value(A, b, c, blocks, y, eta):
    s = c - A.T @ y
    val = -eta * float(b @ y)
    for S in slack_blocks(blocks, s):
        logdet = logdet_pd(S)
        if logdet is None:
            return np.inf
        val -= logdet
    return val


def barrier_gradient(program: SosProgram, y, eta) -> np.ndarray:
    """``-eta b + A diag(P Lambda(s)^{-1} P^T)`` at ``s = c - A^T y``."""
    return block_gradient(program.A, program.b, program.c, program.blocks,
                          np.asarray(y, dtype=float), eta)


def barrier_hessian_dense(program: SosProgram, y) -> np.ndarray:
    """``A (P Lambda(s)^{-1} P^T)^{o2} A^T`` evaluated densely."""
    return block_hessian(program.A, program.c, program.blocks, np.asarray(y, dtype=float))


def barrier_value(program: SosProgram, y, eta) -> float:
    return block_value(program.A, program.b, program.c, program.blocks,
                       np.asarray(y, dtype=float), eta)


class _Maintainer:
    """Slack and Hessian-inverse trackers for a list of blocks."""

    def __init__(self, blocks, A, S0, eps_S, naive):
        self.blocks = blocks
        self.A = A
        self.eps_S = eps_S
        self.naive = naive
        self.single = len(blocks) == 1 and blocks[0][1] is None
        self.Ls = [P.shape[1] for P, _ in blocks]
        self.U = A.shape[1]
        self.m = A.shape[0]
        Lmax = max(self.Ls)
        self.cutoff = self.U / Lmax
        self.log_dim = Lmax
        self.S_tilde = [0.5 * (S + S.T) for S in S0]
        self.refresh_cost = ht.refresh_flops(self.Ls, self.U, self.m)
        self.state = self._refresh()

    def _refresh(self):
        if self.single:
            return ht.full_refresh(self.blocks[0][0], self.A, self.S_tilde[0])
        return ht.full_refresh_wsos(self.blocks, self.A, self.S_tilde)

    def step(self, S_new, eigs):
        """Returns ``(kind, rank_charged, flops_done, flops_naive, rejected)``."""
        if self.single:
            out = st.low_rank_update(
                S_new[0], st.SlackState(self.S_tilde[0], self.eps_S, self.cutoff, self.log_dim),
                eig=eigs[0])
            S_tilde = [out.S_tilde]
            ranks = [out.rank_charged if out.kind == st.LOW_RANK else 0]
            updates = [(out.V1, out.V2)]
        else:
            out = st.low_rank_update_blocks(S_new, self.S_tilde, self.eps_S, self.cutoff,
                                            self.log_dim, eigs=eigs)
            S_tilde = out.S_tilde
            ranks = out.ranks
            updates = list(zip(out.V1, out.V2))
        self.S_tilde = S_tilde
        lru = ht.low_rank_flops(self.Ls, ranks)
        naive_cost = lru + self.refresh_cost
        before = self.state.flops
        rejected = False
        if out.kind == st.FULL_REFRESH or self.naive:
            self.state = self._refresh()
        elif out.kind == st.LOW_RANK:
            try:
                if self.single:
                    self.state = ht.update_hessian_inv(self.state, self.blocks[0][0], self.A,
                                                       *updates[0])
                else:
                    if sum((L + r) * r for L, r in zip(self.Ls, ranks)) > self.U:
                        raise UpdateRejected("stacked update rank exceeds U")
                    self.state = ht.update_hessian_inv_wsos(self.state, self.blocks, self.A,
                                                            updates)
            except UpdateRejected:
                rejected = True
                self.state = self._refresh()
        if out.kind == st.FULL_REFRESH or self.naive or rejected:
            done = lru + self.refresh_cost
        else:
            done = lru + (self.state.flops - before)
        return out.kind, out.rank_charged, done, naive_cost, rejected


def _drift_norm(S_old_eigs, dS):
    total = 0.0
    for (w, Q), D in zip(S_old_eigs, dS):
        inv_sqrt = (Q / np.sqrt(w)) @ Q.T
        total += np.linalg.norm(inv_sqrt @ D @ inv_sqrt) ** 2
    return math.sqrt(total)


def run_barrier(A, b, c, blocks, y0, params: IpmParams, trace: IpmTrace | None = None):
    """Run the fixed schedule from ``(y0, eta=1)``; returns ``(y, s, eta, d, trace)``.

    ``d`` is ``sum_i f_i o diag(P_i Lambda_i(s)^{-1} P_i^T)`` at the final slack.
    """
    A = np.asarray(A, dtype=float)
    nu = sum(P.shape[1] for P, _ in blocks)
    alpha = params.step_factor(nu)
    budget = params.budget(nu)
    if params.max_iter is not None:
        budget = min(budget, params.max_iter)
    trace = trace if trace is not None else IpmTrace()
    trace.nu, trace.alpha, trace.budget = nu, alpha, budget
    mon = {k: [] for k in _MONITOR_FIELDS} if params.monitor else None
    if mon is not None:
        trace.monitor = mon

    y = np.array(y0, dtype=float)
    s = c - A.T @ y
    eta = 1.0
    Ss, eigs, d = _eval_blocks(blocks, s)
    maint = _Maintainer(blocks, A, Ss, params.eps_S, params.naive_mode)
    g = -eta * b + A @ d
    dy = -(maint.state.N @ g)
    H = _hessian_from_eigs(A, blocks, eigs) if mon is not None else None
    delta_sq = params.delta ** 2
    grow = 1.0 + alpha

    try:
        for _ in range(budget):
            y = y + dy
            s = c - A.T @ y
            eta *= grow
            Ss_new, eigs_new, d = _eval_blocks(blocks, s)
            kind, rank, done, naive_cost, rejected = maint.step(Ss_new, eigs_new)
            g = -eta * b + A @ d
            dy_next = -(maint.state.N @ g)

            trace.eta.append(eta)
            trace.kind.append(kind)
            trace.rank_charged.append(rank)
            trace.refresh.append(kind == st.FULL_REFRESH)
            trace.flops_maintained.append(done)
            trace.flops_naive_estimate.append(naive_cost)
            trace.newton_norm_proxy.append(math.sqrt(max(-float(g @ dy_next), 0.0)))
            trace.rejected += int(rejected)

            if mon is not None:
                dS = slack_blocks(blocks, -(A.T @ dy))
                mon["step_norm"].append(math.sqrt(max(float(dy @ H @ dy), 0.0)))
                mon["drift_norm"].append(_drift_norm(eigs, dS))
                H = _hessian_from_eigs(A, blocks, eigs_new)
                mon["centrality"].append(math.sqrt(max(float(g @ np.linalg.solve(H, g)), 0.0)))
                mon["slack_eps"].append(max(spectral_distance(Sn, St)
                                            for Sn, St in zip(Ss_new, maint.S_tilde)))
                mon["hessian_eps"].append(spectral_distance(H, np.linalg.inv(maint.state.N)))
            eigs = eigs_new
            dy = dy_next

            if params.early_exit and (nu + float(y @ g)) / eta <= delta_sq:
                break
    except ConeExitError as exc:
        exc.trace = trace
        raise
    return y, s, eta, d, trace


def solve(program: SosProgram, params: IpmParams | None = None):
    """Solve ``program`` through the auxiliary system; returns ``(Solution, IpmTrace)``."""
    return solve_blocks(program, params or IpmParams())


def solve_blocks(program, params: IpmParams):
    R = params.R if params.R is not None else 10.0 * program.U
    aux, y0, _ = build_aux(program, R, params.delta)
    y_bar, s_bar, eta, d, trace = run_barrier(aux.A_bar, aux.b_bar, aux.c_bar, aux.blocks,
                                              y0, params)
    x_bar = d / eta
    aux_gap = float(aux.c_bar @ x_bar - aux.b_bar @ y_bar)
    x, bounds = extract(aux, x_bar, program)
    # Dual iterate in original scaling; s = c - A^T y holds exactly.
    y = y_bar[:program.m] / aux.c_scale
    s = program.c - program.A.T @ y
    sol = Solution(
        y=y, s=s, x=x,
        gap_bound=bounds.objective_slack,
        feasibility_residual=bounds.feasibility_residual,
        feasibility_bound=bounds.feasibility_bound,
        objective=bounds.objective,
        aux_gap=aux_gap,
        certified=aux_gap <= params.delta ** 2,
        eta=eta,
        iterations=trace.iterations,
        y_bar=y_bar, s_bar=s_bar, x_bar=x_bar,
    )
    return sol, trace
