import numpy as np
import pytest

from uhdgof.families import binomial, gaussian
from uhdgof.lasso import (cv_select_lambda, fit_cv_post_lasso, fit_lasso_path,
                          fit_post_lasso, lambda_grid, residuals)
from uhdgof.simulate import Scenario, gen_study1


def orthonormal_design(rng, n, p):
    """Columns with mean 0 and X'X = n I."""
    M = rng.standard_normal((n, n))
    Q, _ = np.linalg.qr(M)
    X = Q[:, 1:p + 1] * np.sqrt(n)
    X = X - X.mean(axis=0)
    Q2, _ = np.linalg.qr(X)
    return Q2 * np.sqrt(n)


def soft_threshold(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class TestLassoPath:
    def test_orthonormal_equals_soft_threshold(self, rng):
        n, p = 64, 8
        X = orthonormal_design(rng, n, p)
        beta = np.array([2.0, -1.5, 0.8, 0.0, 0.0, 0.3, 0.0, 0.0])
        y = 0.7 + X @ beta + 0.1 * rng.standard_normal(n)
        ols = X.T @ (y - y.mean()) / n  # independent closed-form oracle
        for lam in (0.03, 0.2, 0.7, 1.4):
            coefs, _ = fit_lasso_path(X, y, gaussian(), np.array([lam]))
            assert np.abs(coefs[0] - soft_threshold(ols, lam)).max() < 1e-8

    def test_huge_lambda_gives_null_model(self, rng):
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30) + 3.0
        coefs, intercepts = fit_lasso_path(X, y, gaussian(), np.array([1e8]))
        assert np.all(coefs[0] == 0.0)
        assert intercepts[0] == pytest.approx(y.mean(), abs=1e-12)

    def test_lambda_zero_equals_mle(self, rng):
        n, p = 100, 3
        X = rng.standard_normal((n, p))
        y = 0.5 + X @ np.array([1.0, -2.0, 0.3]) + rng.standard_normal(n)
        grid = np.concatenate([lambda_grid(X, y, gaussian()), [0.0]])
        coefs, intercepts = fit_lasso_path(X, y, gaussian(), grid)
        Z = np.column_stack([np.ones(n), X])
        ref = np.linalg.lstsq(Z, y, rcond=None)[0]
        assert abs(intercepts[-1] - ref[0]) < 1e-6
        assert np.abs(coefs[-1] - ref[1:]).max() < 1e-6

    def test_kkt_conditions(self, rng):
        n, p = 120, 20
        X = rng.standard_normal((n, p))
        X = (X - X.mean(0)) / X.std(0)
        y = X[:, 0] - 0.7 * X[:, 3] + rng.standard_normal(n)
        lam = 0.08
        coefs, intercepts = fit_lasso_path(X, y, gaussian(),
                                           np.array([0.4, lam]), tol=1e-10)
        b = coefs[1]
        grad = X.T @ (y - intercepts[1] - X @ b) / n
        on = b != 0
        assert np.abs(np.abs(grad[on]) - lam).max() < 1e-6
        assert np.abs(grad[~on]).max() <= lam + 1e-6

    def test_kkt_conditions_binomial(self, rng):
        n, p = 200, 10
        X = rng.standard_normal((n, p))
        X = (X - X.mean(0)) / X.std(0)
        prob = 1 / (1 + np.exp(-(0.3 + X[:, 0] - X[:, 2])))
        y = (rng.random(n) < prob).astype(float)
        lam = 0.05
        coefs, intercepts = fit_lasso_path(X, y, binomial(),
                                           np.array([0.3, lam]), tol=1e-10)
        b = coefs[1]
        mu = 1 / (1 + np.exp(-(intercepts[1] + X @ b)))
        grad = X.T @ (y - mu) / n
        on = b != 0
        assert np.abs(np.abs(grad[on]) - lam).max() < 1e-5
        assert np.abs(grad[~on]).max() <= lam + 1e-5
        assert abs((y - mu).sum()) / n < 1e-5  # intercept score equation

    def test_input_validation(self, rng):
        X = rng.standard_normal((20, 3))
        y = rng.standard_normal(20)
        with pytest.raises(ValueError, match="empty lambda"):
            fit_lasso_path(X, y, gaussian(), np.array([]))
        with pytest.raises(ValueError, match="decreasing"):
            fit_lasso_path(X, y, gaussian(), np.array([0.1, 0.2]))
        bad = X.copy()
        bad[0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            fit_lasso_path(bad, y, gaussian(), np.array([0.1]))

    def test_determinism(self, rng):
        X = rng.standard_normal((50, 10))
        y = rng.standard_normal(50)
        grid = lambda_grid(X, y, gaussian())
        a1 = fit_lasso_path(X, y, gaussian(), grid)
        a2 = fit_lasso_path(X, y, gaussian(), grid)
        assert np.array_equal(a1[0], a2[0]) and np.array_equal(a1[1], a2[1])


class TestCvSelect:
    def test_selected_lambda_lies_in_grid(self, rng):
        X = rng.standard_normal((60, 8))
        y = X[:, 0] + rng.standard_normal(60)
        grid = lambda_grid(X, y, gaussian())
        for folds in (2, 10):
            lam = cv_select_lambda(X, y, gaussian(), folds=folds, seed=3)
            assert np.isclose(grid, lam).any()

    def test_deterministic_given_seed(self, rng):
        X = rng.standard_normal((80, 15))
        y = X[:, 1] + rng.standard_normal(80)
        assert cv_select_lambda(X, y, gaussian(), seed=7) == \
            cv_select_lambda(X, y, gaussian(), seed=7)

    def test_errors(self, rng):
        X = rng.standard_normal((30, 4))
        with pytest.raises(ValueError, match="zero variance"):
            cv_select_lambda(X, np.ones(30), gaussian())
        with pytest.raises(ValueError, match="single class"):
            cv_select_lambda(X, np.zeros(30), binomial())
        with pytest.raises(ValueError, match="smaller than folds"):
            cv_select_lambda(X[:5], np.arange(5.0), gaussian(), folds=10)

    def test_pure_noise_false_positives(self):
        # beta = 0: post-lasso support should stay small on average
        fp_counts = []
        for seed in range(100):
            g = np.random.default_rng(seed)
            X = g.standard_normal((200, 50))
            y = g.standard_normal(200)
            model = fit_cv_post_lasso(X, y, gaussian(), seed=seed)
            fp_counts.append(len(model.support))
        assert np.mean(fp_counts) <= 5.0

    def test_strong_signal_support_recovery(self):
        hits = 0
        for seed in range(100):
            data = gen_study1(Scenario(1, "H11", 0.0, 300, 50, seed=seed))
            model = fit_cv_post_lasso(data.X, data.y, gaussian(), seed=seed)
            if set(range(5)) <= set(model.support.tolist()):
                hits += 1
        assert hits >= 95

    def test_signal_coefficient_accuracy(self):
        hits = 0
        for seed in range(100):
            data = gen_study1(Scenario(1, "H11", 0.0, 300, 50, seed=1000 + seed))
            model = fit_cv_post_lasso(data.X, data.y, gaussian(), seed=seed)
            err = np.linalg.norm(model.coefficients[:5] - 1.0)
            if err < 0.5:
                hits += 1
        assert hits >= 95


class TestPostLasso:
    def test_refit_equals_ols_on_support(self, rng):
        n = 80
        X = rng.standard_normal((n, 6))
        y = 1.0 + 2 * X[:, 0] - X[:, 1] + 0.05 * rng.standard_normal(n)
        model = fit_post_lasso(X, y, gaussian(), 0.05)
        assert set(model.support.tolist()) >= {0, 1}
        Z = np.column_stack([np.ones(n), X[:, model.support]])
        ref = np.linalg.lstsq(Z, y, rcond=None)[0]
        assert abs(model.intercept - ref[0]) < 1e-8
        assert np.abs(model.coefficients[model.support] - ref[1:]).max() < 1e-8
        off = np.setdiff1d(np.arange(6), model.support)
        assert np.all(model.coefficients[off] == 0.0)

    def test_binomial_separable_flagged(self, rng):
        n = 60
        x = np.concatenate([-1 - np.abs(rng.standard_normal(n // 2)),
                            1 + np.abs(rng.standard_normal(n // 2))])
        X = np.column_stack([x, rng.standard_normal(n)])
        y = (x > 0).astype(float)
        model = fit_post_lasso(X, y, binomial(), 0.01)
        assert model.nonconverged
        assert np.all(np.isfinite(model.coefficients))

    def test_rank_deficiency_drops_columns(self, rng):
        n = 50
        x0 = rng.standard_normal(n)
        X = np.column_stack([x0, x0, rng.standard_normal(n)])  # duplicated column
        y = 2 * x0 + rng.standard_normal(n) * 0.1
        model = fit_post_lasso(X, y, gaussian(), 1e-4)
        assert len(model.dropped) >= 1
        assert np.all(np.isfinite(model.coefficients))

    def test_study1_null_coefficients(self):
        hits = 0
        for seed in range(100):
            data = gen_study1(Scenario(1, "H11", 0.0, 300, 50, seed=2000 + seed))
            lam = cv_select_lambda(data.X, data.y, gaussian(), seed=seed)
            model = fit_post_lasso(data.X, data.y, gaussian(), lam)
            if np.linalg.norm(model.coefficients[:5] - 1.0) < 0.5:
                hits += 1
        assert hits >= 95

    def test_bit_identical_given_inputs(self, rng):
        X = rng.standard_normal((60, 12))
        y = X[:, 0] + rng.standard_normal(60)
        m1 = fit_cv_post_lasso(X, y, gaussian(), seed=5)
        m2 = fit_cv_post_lasso(X, y, gaussian(), seed=5)
        assert m1.intercept == m2.intercept
        assert np.array_equal(m1.coefficients, m2.coefficients)
        assert np.array_equal(m1.support, m2.support)
        assert m1.lam == m2.lam


class TestResiduals:
    def test_perfect_fit_zero_residuals(self, rng):
        X = rng.standard_normal((30, 2))
        beta = np.array([1.0, -1.0])
        y = 0.3 + X @ beta
        model = fit_post_lasso(X, y, gaussian(), 0.0)
        assert np.abs(residuals(model, X, y)).max() < 1e-10

    def test_binomial_residual_range(self, rng):
        n = 100
        X = rng.standard_normal((n, 4))
        prob = 1 / (1 + np.exp(-X[:, 0]))
        y = (rng.random(n) < prob).astype(float)
        model = fit_cv_post_lasso(X, y, binomial(), seed=1)
        r = residuals(model, X, y)
        assert np.all((r > -1.0) & (r < 1.0))

    def test_gaussian_refit_residuals_sum_to_zero(self, rng):
        X = rng.standard_normal((70, 5))
        y = X[:, 0] + rng.standard_normal(70)
        model = fit_post_lasso(X, y, gaussian(), 0.05)
        assert abs(residuals(model, X, y).sum()) < 1e-10

    def test_dimension_mismatch(self, rng):
        X = rng.standard_normal((30, 4))
        y = rng.standard_normal(30)
        model = fit_post_lasso(X, y, gaussian(), 0.1)
        with pytest.raises(ValueError, match="coefficients"):
            residuals(model, X[:, :3], y)
