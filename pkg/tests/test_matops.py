import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sosipm.errors import NotPSDError, SingularError, UpdateRejected
from sosipm.matops import (SpectralApprox, check_spectral_approx, generalized_eigvals,
                           hadamard_square, psd_inv_sqrt, psd_sqrt, solve_inner,
                           spectral_distance, sym_eig, woodbury_inverse_update)

from conftest import random_spd


def test_sym_eig_examples():
    w, X = sym_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    w, X = sym_eig(np.diag([2.0, -1.0]))
    np.testing.assert_allclose(w, [-1.0, 2.0])
    np.testing.assert_allclose(np.abs(X), np.array([[0, 1], [1, 0]]), atol=1e-15)


def test_sym_eig_rejects_asymmetric():
    with pytest.raises(ValueError):
        sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(seed=st.integers(0, 2**32 - 1))
def test_sym_eig_reconstruction(seed):
    M = np.random.default_rng(seed).standard_normal((5, 5))
    M = M + M.T
    w, X = sym_eig(M)
    assert np.linalg.norm(X.T @ X - np.eye(5)) <= 1e-8 * 5
    assert np.linalg.norm(X @ np.diag(w) @ X.T - M) <= 1e-8 * np.linalg.norm(M)


def test_psd_sqrt_examples():
    np.testing.assert_allclose(psd_sqrt(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_psd_sqrt_residual(rng):
    P = rng.standard_normal((8, 4))
    M = P.T @ P
    R = psd_sqrt(M)
    assert np.linalg.norm(R @ R - M) <= 1e-8 * np.linalg.norm(M)
    np.testing.assert_allclose(R, R.T)


def test_psd_sqrt_clamps_tiny_negative():
    M = np.diag([1.0, -1e-13])
    R = psd_sqrt(M)
    assert R[1, 1] == 0.0


def test_psd_sqrt_rejects_negative():
    with pytest.raises(NotPSDError):
        psd_sqrt(np.diag([1.0, -0.5]))


def test_psd_inv_sqrt(rng):
    M = random_spd(rng, 4)
    R = psd_inv_sqrt(M)
    np.testing.assert_allclose(R @ M @ R, np.eye(4), atol=1e-12)
    with pytest.raises(NotPSDError):
        psd_inv_sqrt(np.diag([1.0, 0.0]))


def test_woodbury_examples():
    Ainv = np.eye(3)
    np.testing.assert_array_equal(woodbury_inverse_update(Ainv, np.zeros((3, 0)),
                                                          np.zeros((3, 0))), Ainv)
    e1 = np.array([[1.0], [0.0]])
    np.testing.assert_allclose(woodbury_inverse_update(np.eye(2), e1, e1), np.diag([0.5, 1.0]))


def test_woodbury_random(rng):
    A = random_spd(rng, 6)
    U = rng.standard_normal((6, 2)) * 0.3
    V = rng.standard_normal((6, 2)) * 0.3
    got = woodbury_inverse_update(np.linalg.inv(A), U, V)
    want = np.linalg.inv(A + U @ V.T)
    assert np.linalg.norm(got - want) <= 1e-9 * np.linalg.norm(want)


def test_woodbury_singular_inner_rejected():
    e1 = np.array([[1.0], [0.0]])
    with pytest.raises(UpdateRejected):
        woodbury_inverse_update(np.eye(2), e1, -e1)
    with pytest.raises(UpdateRejected):
        solve_inner(np.zeros((2, 2)), np.eye(2))


def test_spectral_approx_examples():
    A = np.diag([1.0, 2.0, 5.0])
    assert check_spectral_approx(A, A, 0.0)
    assert not check_spectral_approx(np.eye(3), np.exp(0.02) * np.eye(3), 0.01)
    assert check_spectral_approx(np.eye(3), np.exp(0.005) * np.eye(3), 0.01)
    assert SpectralApprox(0.01).holds(np.eye(2), np.exp(-0.009) * np.eye(2))


def test_spectral_approx_singular_reference():
    with pytest.raises(SingularError):
        check_spectral_approx(np.diag([1.0, 0.0]), np.eye(2), 0.1)


def test_spectral_distance(rng):
    A = random_spd(rng, 4)
    assert spectral_distance(A, 2.0 * A) == pytest.approx(np.log(2.0))
    lam = generalized_eigvals(A, A)
    np.testing.assert_allclose(lam, 1.0, atol=1e-12)


def test_hadamard_square_examples():
    np.testing.assert_array_equal(hadamard_square(np.eye(3)), np.eye(3))
    np.testing.assert_array_equal(hadamard_square(np.ones((2, 2))), np.ones((2, 2)))
    np.testing.assert_array_equal(hadamard_square([[1, 2], [3, 4]]), [[1, 4], [9, 16]])


def test_logdet_pd_rejects_even_order_negative_definite():
    from sosipm.matops import logdet_pd
    assert logdet_pd(-np.eye(2)) is None
    assert logdet_pd(np.diag([1.0, -1.0])) is None
    assert logdet_pd(np.diag([2.0, 3.0])) == pytest.approx(np.log(6.0), rel=1e-14)
