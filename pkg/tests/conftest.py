import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sosipm import frontend_io as fio
from sosipm.polyspace import build_basis, make_dims
from sosipm.wsos import interval_weights

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_spd(rng, n, lo=1.0, hi=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return (Q * rng.uniform(lo, hi, n)) @ Q.T


def synthetic_P(rng, U, L):
    """Random U x L matrix with singular values in [1, 2]."""
    Q1, _ = np.linalg.qr(rng.standard_normal((U, L)))
    Q2, _ = np.linalg.qr(rng.standard_normal((L, L)))
    return (Q1 * rng.uniform(1.0, 2.0, L)) @ Q2


def poly_values(coeffs, t):
    return np.polynomial.polynomial.polyval(np.asarray(t).reshape(-1), coeffs)


def lower_bound_problem(coeffs, d):
    basis = build_basis(make_dims(1, d))
    return fio.lower_bound_frontend(poly_values(coeffs, basis.points), basis)


def interval_problem(coeffs, d):
    basis = fio.interval_basis(d)
    f = poly_values(coeffs, basis.points)
    return fio.interval_min_frontend(f, basis, interval_weights(basis.points, d))


def bivariate_problem():
    """x^4 + y^4 + xy - x^2/2 + 1 over R^2 (n=2, d=2)."""
    basis = build_basis(make_dims(2, 2))
    x, y = basis.points.T
    f = x ** 4 + y ** 4 + x * y - 0.5 * x ** 2 + 1.0
    return fio.lower_bound_frontend(f, basis)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
