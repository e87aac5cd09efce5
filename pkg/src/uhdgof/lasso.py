"""Sparse GLM estimation: lasso paths, cross-validated penalty, post-lasso refit.

The estimator pipeline is the standard one for sparse regression:
fit an L1-penalized GLM over a descending penalty grid, pick the
penalty by K-fold out-of-fold deviance, then refit an unpenalized
GLM on the selected support.  Residuals from the refit feed the
test statistics elsewhere in the package.

Design matrices are standardized internally on copies; all returned
coefficients and intercepts are on the original scale of X.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._cd import binom_lasso_path, gauss_lasso_path
from .families import Family, resolve_family

__all__ = [
    "FittedModel",
    "lambda_grid",
    "fit_lasso_path",
    "cv_select_lambda",
    "fit_post_lasso",
    "fit_cv_post_lasso",
    "residuals",
]

# Convergence criterion: max coefficient change per pass.
CD_TOL = 1e-7
# Caps for fold fits inside CV.  The degenerate small-lambda end of a
# p > n path converges arbitrarily slowly; capped solutions there are
# heavily overfit either way and never win the CV comparison.
_CV_MAX_OUTER = 2
_CV_MAX_ACTIVE = 12
# Caps for returned solutions (effectively unlimited at a selected
# penalty, since warm starts leave little work).
_FIT_MAX_OUTER = 12
_FIT_MAX_ACTIVE = 1000

_N_LAMBDAS = 100
_LAMBDA_RATIO = 1e-3


@dataclass(frozen=True, eq=False)
class FittedModel:
    """A post-lasso fit: unpenalized refit on the lasso-selected support.

    `coefficients` has length p with exact zeros off `support`; the
    intercept is always fitted.  Treat arrays as immutable.
    """

    intercept: float
    coefficients: np.ndarray
    support: np.ndarray
    lam: float
    family: Family
    nonconverged: bool = False
    dropped: tuple = field(default=())

    def linear_index(self, X) -> np.ndarray:
        """X @ beta, without the intercept."""
        return np.asarray(X, dtype=float) @ self.coefficients

    def eta(self, X) -> np.ndarray:
        """Full linear predictor intercept + X @ beta."""
        return self.intercept + self.linear_index(X)

    def predict_mean(self, X) -> np.ndarray:
        return self.family.mu(self.eta(X))


def _validate_xy(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2-d array")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise ValueError("non-finite values in the design or response")
    return X, y


def _standardize(X):
    """Column means/scales (population variance) and the standardized copy."""
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    safe = np.where(scales > 1e-12, scales, 1.0)
    Xs = np.asfortranarray((X - means) / safe)
    return Xs, means, safe


def lambda_grid(X, y, family, n_lambdas: int = _N_LAMBDAS, ratio: float = _LAMBDA_RATIO):
    """Descending log-spaced penalty grid from lambda_max down by `ratio`.

    lambda_max is the smallest penalty with empty support: the max
    absolute gradient of the unpenalized loss at the intercept-only
    model, on the standardized scale.
    """
    X, y = _validate_xy(X, y)
    family = resolve_family(family)
    Xs, _, _ = _standardize(X)
    n = y.shape[0]
    # for both families the null-model gradient is Xs'(y - ybar)/n
    lam_max = float(np.abs(Xs.T @ (y - y.mean())).max() / n)
    if lam_max <= 0.0:
        raise ValueError("degenerate response: empty-support penalty is zero")
    return lam_max * ratio ** (np.arange(n_lambdas) / (n_lambdas - 1))


def _path_standardized(Xs, y, family, lambdas, tol, max_outer, max_active):
    """Path solutions on the standardized scale: (B, intercepts)."""
    if family.kind == "gaussian":
        yc = y - y.mean()
        B = gauss_lasso_path(Xs, yc, lambdas, tol, max_outer, max_active)
        a = np.full(lambdas.shape[0], y.mean())
    else:
        B, a = binom_lasso_path(Xs, y, lambdas, tol, max_outer, max_active * 3)
    return B, a


def _to_original_scale(B, a, means, scales):
    B_orig = B / scales
    a_orig = a - B_orig @ means
    return B_orig, a_orig


def fit_lasso_path(X, y, family, lambdas, *, tol: float = CD_TOL,
                   max_outer: int = _FIT_MAX_OUTER, max_active: int = _FIT_MAX_ACTIVE):
    """Warm-started lasso path over a strictly decreasing positive grid.

    Returns (coefs, intercepts) with coefs of shape (len(lambdas), p)
    on the original scale of X.  The intercept is never penalized.
    """
    X, y = _validate_xy(X, y)
    family = resolve_family(family)
    family.validate_response(y)
    lambdas = np.asarray(lambdas, dtype=float).ravel()
    if lambdas.size == 0:
        raise ValueError("empty lambda sequence")
    if np.any(lambdas < 0) or (lambdas.size > 1 and np.any(np.diff(lambdas) >= 0)):
        raise ValueError("lambdas must be strictly decreasing and nonnegative")
    Xs, means, scales = _standardize(X)
    B, a = _path_standardized(Xs, y, family, lambdas, tol, max_outer, max_active)
    return _to_original_scale(B, a, means, scales)


def _fold_ids(n, folds, rng):
    perm = rng.permutation(n)
    ids = np.empty(n, dtype=np.int64)
    ids[perm] = np.arange(n) % folds
    return ids


def cv_select_lambda(X, y, family, folds: int = 10, seed: int = 0, *,
                     rule: str = "min", n_lambdas: int = _N_LAMBDAS,
                     ratio: float = _LAMBDA_RATIO, tol: float = CD_TOL) -> float:
    """Penalty selected by K-fold out-of-fold deviance over the default grid.

    rule="min" returns the deviance minimizer; rule="1se" returns the
    largest penalty whose CV deviance is within one standard error of
    the minimum (sparser fits, more accurate fitted directions).
    Deterministic given `seed`.  Ties resolve to the largest penalty.
    Degenerate binomial fold assignments (a single-class training set)
    are re-drawn once, then raise.
    """
    if rule not in ("min", "1se"):
        raise ValueError("rule must be 'min' or '1se'")
    X, y = _validate_xy(X, y)
    family = resolve_family(family)
    family.validate_response(y)
    n = y.shape[0]
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if n < folds:
        raise ValueError(f"n={n} is smaller than folds={folds}")
    if family.kind == "gaussian" and np.std(y) <= 1e-12:
        raise ValueError("degenerate response: zero variance")
    if family.kind == "binomial" and np.unique(y).size < 2:
        raise ValueError("degenerate response: single class")

    grid = lambda_grid(X, y, family, n_lambdas=n_lambdas, ratio=ratio)

    ids = _fold_ids(n, folds, np.random.default_rng(np.random.SeedSequence((seed, 0))))
    if family.kind == "binomial":
        bad = any(np.unique(y[ids != k]).size < 2 for k in range(folds))
        if bad:
            ids = _fold_ids(n, folds, np.random.default_rng(np.random.SeedSequence((seed, 1))))
            bad = any(np.unique(y[ids != k]).size < 2 for k in range(folds))
            if bad:
                raise ValueError("single-class training fold after one re-draw")

    fold_dev = np.zeros((folds, grid.shape[0]))  # per-observation deviance means
    for k in range(folds):  # accumulate in fold index order
        train = ids != k
        test = ~train
        Xs, means, scales = _standardize(X[train])
        B, a = _path_standardized(Xs, y[train], family, grid, tol,
                                  _CV_MAX_OUTER, _CV_MAX_ACTIVE)
        B_orig, a_orig = _to_original_scale(B, a, means, scales)
        eta = X[test] @ B_orig.T + a_orig  # (n_test, L)
        mu = family.mu(eta)
        for l in range(grid.shape[0]):
            fold_dev[k, l] = family.deviance(y[test], mu[:, l]) / test.sum()
    cvm = fold_dev.mean(axis=0)
    i_min = int(np.argmin(cvm))
    if rule == "min":
        return float(grid[i_min])
    se = float(np.std(fold_dev[:, i_min], ddof=1)) / math.sqrt(folds)
    i_1se = int(np.argmax(cvm <= cvm[i_min] + se))  # first index = largest penalty
    return float(grid[i_1se])


def _drop_to_full_rank(Z, support, lasso_coef):
    """Drop support columns, smallest |lasso coefficient| first, until
    the intercept-augmented design Z has full column rank."""
    dropped = []
    keep = list(range(len(support)))
    while keep:
        cols = np.column_stack([np.ones(Z.shape[0]), Z[:, keep]])
        if np.linalg.matrix_rank(cols) == cols.shape[1]:
            break
        order = np.argsort(np.abs(lasso_coef[np.array(keep)]), kind="stable")
        victim = keep[order[0]]
        dropped.append(int(support[victim]))
        keep.remove(victim)
    return keep, dropped


def _refit_gaussian(Xs, y):
    Z = np.column_stack([np.ones(Xs.shape[0]), Xs])
    coef, *_ = np.linalg.lstsq(Z, y, rcond=None)
    return float(coef[0]), coef[1:], False


def _refit_binomial(Xs, y, max_iter: int = 100, tol: float = 1e-8):
    """Unpenalized logistic refit by Newton / IRLS with capped iterations.

    Separable designs make the MLE diverge; the capped estimate is
    returned with nonconverged=True instead of raising.
    """
    n = Xs.shape[0]
    Z = np.column_stack([np.ones(n), Xs])
    theta = np.zeros(Z.shape[1])
    ybar = y.mean()
    theta[0] = np.log(ybar / (1 - ybar)) if 0 < ybar < 1 else np.sign(ybar - 0.5) * 30.0
    nonconverged = True
    for _ in range(max_iter):
        eta = np.clip(Z @ theta, -30, 30)
        mu = 1.0 / (1.0 + np.exp(-eta))
        w = np.maximum(mu * (1.0 - mu), 1e-10)
        zwork = eta + (y - mu) / w
        sw = np.sqrt(w)
        step, *_ = np.linalg.lstsq(Z * sw[:, None], zwork * sw, rcond=None)
        delta = np.max(np.abs(step - theta))
        theta = step
        if delta < tol:
            nonconverged = False
            break
    return float(theta[0]), theta[1:], nonconverged


def fit_post_lasso(X, y, family, lam: float, *, tol: float = CD_TOL) -> FittedModel:
    """Lasso at `lam`, then an unpenalized GLM refit on the selected support.

    Coefficients outside the support are exactly zero.  Rank-deficient
    selected submatrices are repaired by dropping the support columns
    with the smallest absolute lasso coefficients; the dropped indices
    are recorded on the model.
    """
    X, y = _validate_xy(X, y)
    family = resolve_family(family)
    family.validate_response(y)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    p = X.shape[1]

    grid = lambda_grid(X, y, family)
    path = np.concatenate([grid[grid > lam], [lam]])
    coefs, _ = fit_lasso_path(X, y, family, path, tol=tol)
    lasso_coef = coefs[-1]
    support = np.flatnonzero(lasso_coef)

    dropped: list[int] = []
    if support.size:
        keep, dropped = _drop_to_full_rank(X[:, support], support, lasso_coef[support])
        support = support[np.array(keep, dtype=int)] if keep else np.empty(0, dtype=int)

    coefficients = np.zeros(p)
    nonconverged = False
    if support.size:
        if family.kind == "gaussian":
            intercept, beta_s, nonconverged = _refit_gaussian(X[:, support], y)
        else:
            intercept, beta_s, nonconverged = _refit_binomial(X[:, support], y)
        coefficients[support] = beta_s
    else:
        if family.kind == "gaussian":
            intercept = float(y.mean())
        else:
            ybar = y.mean()
            intercept = float(np.log(ybar / (1 - ybar))) if 0 < ybar < 1 else np.sign(ybar - 0.5) * 30.0
    return FittedModel(intercept=intercept, coefficients=coefficients,
                       support=support, lam=float(lam), family=family,
                       nonconverged=nonconverged, dropped=tuple(dropped))


def fit_cv_post_lasso(X, y, family, folds: int = 10, seed: int = 0,
                      rule: str = "min") -> FittedModel:
    """CV penalty selection followed by the post-lasso refit."""
    lam = cv_select_lambda(X, y, family, folds=folds, seed=seed, rule=rule)
    return fit_post_lasso(X, y, family, lam)


def residuals(model: FittedModel, X, y) -> np.ndarray:
    """Raw residuals y - mu(intercept + X @ beta)."""
    X, y = _validate_xy(X, y)
    if X.shape[1] != model.coefficients.shape[0]:
        raise ValueError(
            f"model has {model.coefficients.shape[0]} coefficients, X has {X.shape[1]} columns"
        )
    return y - model.predict_mean(X)
