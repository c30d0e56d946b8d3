import numpy as np
import pytest

from driftmon.errors import InsufficientData
from driftmon.forecasters import fit_at_lambda, lasso_path, soft_threshold
from driftmon.stats import bic


def random_problem(seed, n=200, p=20, sparsity=5):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta = np.zeros(p)
    beta[:sparsity] = rng.normal(size=sparsity) * 2
    y = X @ beta + rng.normal(size=n)
    return X, y


def standardized(X):
    Xc = X - X.mean(axis=0)
    sd = np.sqrt((Xc ** 2).mean(axis=0))
    return Xc / sd, sd


def kkt_violation(X, y, intercept, slopes, lam):
    """Worst KKT slack of a solution in the (1/n) <x, r> = lam convention."""
    n = X.shape[0]
    Xs, sd = standardized(X)
    residual = y - intercept - X @ slopes
    grad = Xs.T @ residual / n
    beta_std = slopes * sd
    worst = 0.0
    zero = beta_std == 0.0
    if zero.any():
        worst = max(worst, float(np.max(np.abs(grad[zero]))) - lam)
    if (~zero).any():
        active = grad[~zero] - lam * np.sign(beta_std[~zero])
        worst = max(worst, float(np.max(np.abs(active))))
    return worst


def test_lambda_max_gives_intercept_only():
    X, y = random_problem(0)
    fit = lasso_path(X, y, n_lambda=1)  # grid collapses to lambda_max
    assert np.all(fit.slopes == 0.0)
    assert fit.intercept == pytest.approx(y.mean(), rel=1e-12)


def test_lambda_zero_on_exact_line():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(60, 1))
    y = 2.0 * x[:, 0]
    intercept, slopes = fit_at_lambda(x, y, 0.0)
    assert slopes[0] == pytest.approx(2.0, abs=1e-8)
    assert intercept == pytest.approx(0.0, abs=1e-8)


def test_single_predictor_matches_soft_threshold_oracle():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(100, 1))
    y = 1.5 * x[:, 0] + rng.normal(size=100)
    Xs, sd = standardized(x)
    yc = y - y.mean()
    beta_ols = float(Xs[:, 0] @ yc) / 100
    for lam in (0.0, 0.1, 0.5, abs(beta_ols) * 1.1):
        intercept, slopes = fit_at_lambda(x, y, lam)
        expected = soft_threshold(beta_ols, lam) / sd[0]
        assert slopes[0] == pytest.approx(expected, abs=1e-9)


def test_kkt_on_seeded_problems():
    for seed in range(3):
        X, y = random_problem(seed)
        fit = lasso_path(X, y)
        assert kkt_violation(X, y, fit.intercept, fit.slopes, fit.lam) < 1e-6


def test_active_set_monotone_along_grid():
    # grid runs lambda_max -> small, so active counts may only grow
    for seed in range(10):
        X, y = random_problem(seed)
        fit = lasso_path(X, y)
        assert np.all(np.diff(fit.n_nonzero_path) >= 0)


def test_bic_selection_minimizes_over_grid():
    X, y = random_problem(11)
    n = X.shape[0]
    fit = lasso_path(X, y, keep_path=True)
    scores = []
    for lam, intercept, slopes in fit.path:
        residual = y - intercept - X @ slopes
        scores.append(bic(float(residual @ residual), n, int(np.count_nonzero(slopes)) + 1))
    assert fit.bic == pytest.approx(min(scores), rel=1e-12)
    assert fit.lam == fit.path[int(np.argmin(scores))][0]


def test_zero_variance_column_is_dropped():
    X, y = random_problem(3, p=5)
    X[:, 2] = 4.2
    fit = lasso_path(X, y)
    assert fit.slopes[2] == 0.0
    pred = fit.intercept + X @ fit.slopes
    assert np.all(np.isfinite(pred))


def test_all_constant_predictors():
    X = np.full((30, 3), 2.0)
    y = np.random.default_rng(4).normal(size=30)
    fit = lasso_path(X, y)
    assert np.all(fit.slopes == 0.0)
    assert fit.intercept == pytest.approx(y.mean())


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        lasso_path(np.zeros((1, 2)), np.zeros(1))


def test_soft_threshold():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0
