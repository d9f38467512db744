import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causal_combine.errors import DimensionMismatch, NoConvergence, SingularMoment
from causal_combine.linmodel import (
    Dataset,
    concatenate,
    fit_lasso,
    fit_ols,
    fit_ridge,
    soft_threshold,
    spd_solve,
)


def cramer_2x2(X, y):
    # normal equations solved with an explicit 2x2 inverse
    a, b = X[:, 0] @ X[:, 0], X[:, 0] @ X[:, 1]
    d = X[:, 1] @ X[:, 1]
    u, v = X[:, 0] @ y, X[:, 1] @ y
    det = a * d - b * b
    return np.array([(d * u - b * v) / det, (a * v - b * u) / det])


def test_ols_exact_interpolation():
    fit = fit_ols(Dataset([[1.0], [1.0]], [2.0, 2.0]))
    assert fit.coef == pytest.approx([2.0])
    assert fit.residual_variance == pytest.approx(0.0, abs=1e-15)


def test_ols_noiseless_recovers_coefficients(rng):
    X = rng.standard_normal((20, 4))
    alpha = np.array([1.0, -2.0, 0.5, 3.0])
    fit = fit_ols(Dataset(X, X @ alpha))
    np.testing.assert_allclose(fit.coef, alpha, atol=1e-12)


def test_ols_matches_cramer_oracle():
    i = np.arange(1, 6)[:, None]
    j = np.arange(1, 3)[None, :]
    X = ((i * j) % 7 - 3).astype(float)
    y = X @ np.array([1.0, -2.0]) + np.array([0.1, -0.1, 0.1, -0.1, 0.1])
    fit = fit_ols(Dataset(X, y))
    np.testing.assert_allclose(fit.coef, cramer_2x2(X, y), atol=1e-10)


def test_ols_residual_variance_brute_force(rng):
    X = rng.standard_normal((15, 3))
    y = rng.standard_normal(15)
    fit = fit_ols(Dataset(X, y))
    total = 0.0
    for xi, yi in zip(X, y):
        total += (yi - sum(a * b for a, b in zip(xi, fit.coef))) ** 2
    assert fit.residual_variance == pytest.approx(total / 14, rel=1e-12)


def test_ols_moment_inverse_is_symmetric(rng):
    X = rng.standard_normal((50, 5))
    fit = fit_ols(Dataset(X, rng.standard_normal(50)))
    M = fit.moment_inverse
    assert np.abs(M - M.T).max() < 1e-8
    assert np.linalg.eigvalsh(M).min() > 0
    np.testing.assert_allclose(M @ (X.T @ X), np.eye(5), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rows=st.integers(6, 60), p=st.integers(1, 5))
def test_ols_normal_equations_residual(seed, rows, p):
    r = np.random.default_rng(seed)
    X = r.standard_normal((rows, p))
    y = r.standard_normal(rows) * 3
    fit = fit_ols(Dataset(X, y))
    grad = X.T @ (y - X @ fit.coef)
    assert np.abs(grad).max() < 1e-8 * np.abs(X.T @ y).max()


def test_ols_rejects_collinear_and_short_data(rng):
    x = rng.standard_normal(10)
    with pytest.raises(SingularMoment):
        fit_ols(Dataset(np.column_stack([x, 2 * x]), rng.standard_normal(10)))
    with pytest.raises(SingularMoment):
        fit_ols(Dataset(rng.standard_normal((3, 3)), rng.standard_normal(3)))


def test_dataset_shape_checks():
    with pytest.raises(DimensionMismatch):
        Dataset(np.ones((3, 2)), np.ones(4))
    with pytest.raises(DimensionMismatch):
        concatenate(Dataset(np.ones((3, 2)), np.ones(3)), Dataset(np.ones((3, 1)), np.ones(3)))


def test_ridge_zero_penalty_is_ols(rng):
    data = Dataset(rng.standard_normal((30, 4)), rng.standard_normal(30))
    np.testing.assert_allclose(fit_ridge(data, 0.0).coef, fit_ols(data).coef, atol=1e-10)


def test_ridge_infinite_penalty(rng):
    data = Dataset(rng.uniform(-1, 1, (30, 4)), rng.uniform(-1, 1, 30))
    assert np.linalg.norm(fit_ridge(data, 1e12).coef) < 1e-6


def test_ridge_identity_design():
    fit = fit_ridge(Dataset(np.eye(2), [3.0, -1.0]), 1.0)
    np.testing.assert_allclose(fit.coef, [1.5, -0.5], atol=1e-14)
    np.testing.assert_allclose(fit.moment_inverse, 0.5 * np.eye(2), atol=1e-14)


def test_ridge_norm_nonincreasing_in_penalty(rng):
    data = Dataset(rng.standard_normal((25, 6)), rng.standard_normal(25))
    norms = [np.linalg.norm(fit_ridge(data, lam).coef) for lam in np.logspace(-4, 4, 30)]
    assert np.all(np.diff(norms) <= 1e-12)


def test_spd_solve_falls_back_on_semidefinite():
    A = np.diag([2.0, 0.0])
    np.testing.assert_allclose(spd_solve(A, np.array([4.0, 0.0])), [2.0, 0.0])


def test_lasso_zero_penalty_matches_ols(rng):
    data = Dataset(rng.standard_normal((40, 5)), rng.standard_normal(40))
    fit = fit_lasso(data, 0.0, tol=1e-12)
    np.testing.assert_allclose(fit.coef, fit_ols(data).coef, atol=1e-8)
    assert fit.moment_inverse is None


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0, 2.5, 7.0])
def test_lasso_orthonormal_design_soft_threshold(lam):
    y = np.array([3.0, -0.2, 1.1, -4.0, 0.0])
    fit = fit_lasso(Dataset(np.eye(5), y), lam)
    expected = np.sign(y) * np.maximum(np.abs(y) - lam / 2, 0)
    np.testing.assert_allclose(fit.coef, expected, atol=1e-6)
    np.testing.assert_allclose(soft_threshold(y, lam / 2), expected)


def test_lasso_zero_solution_threshold(rng):
    X = rng.standard_normal((30, 4))
    y = rng.standard_normal(30)
    lam = 2 * np.abs(X.T @ y).max()
    fit = fit_lasso(Dataset(X, y), lam)
    assert np.all(fit.coef == 0.0)
    # subgradient condition at zero
    assert np.all(np.abs(2 * X.T @ y) <= lam)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam_frac=st.floats(0.01, 0.9))
def test_lasso_kkt(seed, lam_frac):
    r = np.random.default_rng(seed)
    X = r.standard_normal((25, 6))
    y = X @ r.standard_normal(6) + r.standard_normal(25)
    lam = lam_frac * 2 * np.abs(X.T @ y).max()
    tol = 1e-8
    fit = fit_lasso(Dataset(X, y), lam, tol=tol)
    g = 2 * X.T @ (y - X @ fit.coef)
    # scale the coordinate tolerance into gradient units
    slack = tol * 2 * np.abs(X.T @ X).sum(axis=1).max()
    zero = fit.coef == 0
    assert np.all(np.abs(g[zero]) <= lam + slack)
    np.testing.assert_allclose(g[~zero], lam * np.sign(fit.coef[~zero]), atol=slack)


def test_lasso_reports_nonconvergence(rng):
    X = rng.standard_normal((30, 5))
    X[:, 1] = X[:, 0] + 0.01 * X[:, 1]
    with pytest.warns(NoConvergence):
        fit = fit_lasso(Dataset(X, rng.standard_normal(30)), 0.01, tol=1e-14, max_iter=2)
    assert not fit.converged
    assert fit.n_iter == 2
