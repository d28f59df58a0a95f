import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sosipm import oracle
from sosipm.init_transform import (aux_barrier, build_aux, cone_gradient, extract,
                                   initial_primal, product_barrier)
from sosipm.ipm import IpmParams, SosProgram, block_gradient, solve
from sosipm.matops import generalized_eigvals
from sosipm.polyspace import build_basis, lambda_adjoint, lambda_of, make_dims

from conftest import interval_problem, lower_bound_problem


def _programs():
    return [lower_bound_problem([3, 2, 1], 1).program,
            lower_bound_problem([1, 0, -2, 0, 1], 2).program,
            interval_problem([0.3, -1, 0, 2], 2).program]


@pytest.mark.parametrize("idx", range(3))
def test_initial_triple_is_feasible(idx):
    prog = _programs()[idx]
    aux, y0, s0 = build_aux(prog, 10.0 * prog.U, 1e-3)
    x0 = initial_primal(aux)
    assert np.abs(aux.A_bar @ x0 - aux.b_bar).max() <= 1e-10
    assert np.abs(aux.A_bar.T @ y0 + s0 - aux.c_bar).max() <= 1e-10
    g = block_gradient(aux.A_bar, aux.b_bar, aux.c_bar, aux.blocks, y0, 1.0)
    assert np.linalg.norm(g) <= 1e-8


def test_aux_matrices_layout():
    prog = _programs()[0]
    R, delta = 30.0, 1e-3
    aux, y0, s0 = build_aux(prog, R, delta)
    m, U = prog.A.shape
    g0 = aux.g0
    np.testing.assert_array_equal(aux.A_bar[:m, :U], prog.A)
    np.testing.assert_array_equal(aux.A_bar[:m, U], 0.0)
    np.testing.assert_allclose(aux.A_bar[:m, U + 1], prog.b / R - prog.A @ g0)
    np.testing.assert_array_equal(aux.A_bar[m], np.r_[np.ones(U), 1.0, 0.0])
    np.testing.assert_allclose(aux.b_bar, np.r_[prog.b / R, 1.0 + g0.sum()])
    c_inf = np.abs(prog.c).max()
    np.testing.assert_allclose(aux.c_bar, np.r_[delta / c_inf * prog.c, 0.0, 1.0])
    np.testing.assert_array_equal(y0, np.r_[np.zeros(m), -1.0])
    np.testing.assert_allclose(s0, np.r_[1.0 + delta / c_inf * prog.c, 1.0, 1.0])
    assert aux.nu == prog.L + 2
    np.testing.assert_array_equal(aux.P_bar[:U, :prog.L], prog.basis.P)
    assert aux.P_bar[U, prog.L] == 1.0 and aux.P_bar[U + 1, prog.L + 1] == 1.0


@given(seed=st.integers(0, 2**32 - 1), delta=st.floats(1e-4, 0.5))
def test_g0_norm_bound(seed, delta):
    rng = np.random.default_rng(seed)
    basis = build_basis(make_dims(2, 2))
    A = rng.standard_normal((4, basis.U))
    c = rng.standard_normal(basis.U)
    prog = SosProgram(basis, A, rng.standard_normal(4), c)
    aux, _, _ = build_aux(prog, 50.0, delta)
    L = basis.L
    assert (1 - delta) * L <= np.abs(aux.g0).sum() <= (1 + delta) * L


def test_zero_objective_rejected():
    prog = _programs()[0]
    zero = SosProgram(prog.basis, prog.A, prog.b, np.zeros(prog.U))
    with pytest.raises(ValueError):
        build_aux(zero, 10.0, 1e-3)


@given(seed=st.integers(0, 2**32 - 1))
def test_product_barrier_decomposes(seed):
    prog = _programs()[1]
    aux, _, _ = build_aux(prog, 50.0, 1e-2)
    s = np.random.default_rng(seed).uniform(0.1, 2.0, prog.U + 2)
    assert aux_barrier(aux, s) == pytest.approx(product_barrier(prog, s), abs=1e-12)


def test_extract_zero_and_bounds():
    prog = _programs()[0]
    aux, _, _ = build_aux(prog, 30.0, 1e-3)
    x, b = extract(aux, np.zeros(prog.U + 2), prog)
    np.testing.assert_array_equal(x, 0.0)
    assert b.objective_slack == pytest.approx(1e-3 * 30.0 * np.abs(prog.c).max())
    A_norm = np.abs(prog.A).sum(axis=0).max()
    L = prog.L
    want = 8e-3 * L * (L * 30.0 * A_norm + np.abs(prog.b).sum())
    assert b.feasibility_bound == pytest.approx(want)
    assert b.feasibility_residual == pytest.approx(np.abs(prog.b).sum())


def test_end_to_end_feasibility_within_bound_and_primal_cone():
    red = lower_bound_problem([3, 2, 1], 1)
    sol, _ = solve(red.program, IpmParams(delta=1e-2))
    assert sol.feasibility_residual <= sol.feasibility_bound
    basis = red.program.basis
    rng = np.random.default_rng(5)
    G0 = basis.P.T @ basis.P
    for _ in range(100):
        V = rng.standard_normal((basis.L, basis.L))
        s1 = lambda_adjoint(basis, V @ V.T)
        r = rng.standard_normal(basis.U)
        tau = max(0.0, -generalized_eigvals(G0, lambda_of(basis, r))[0])
        for s in (s1, r + tau):
            assert oracle.dual_membership(basis, s)
            assert sol.x @ s >= -1e-9 * np.abs(sol.x).sum() * np.abs(s).max()


def test_cone_gradient_log_homogeneity():
    basis = build_basis(make_dims(2, 2))
    s = np.random.default_rng(1).uniform(0.5, 1.5, basis.U)
    g = cone_gradient([(basis.P, None)], s)
    assert g @ s == pytest.approx(basis.L, rel=1e-12)


def test_barriers_infinite_outside_cone():
    prog = _programs()[0]
    aux, _, _ = build_aux(prog, 30.0, 1e-2)
    s = -np.ones(prog.U + 2)
    s[-2:] = 1.0
    assert aux_barrier(aux, s) == np.inf
    assert product_barrier(prog, s) == np.inf
