"""Data splitting and data-driven projection directions.

Projections are estimated on one half of the data so the test statistic
evaluated on the other half stays independent of the chosen directions.
The directions are:

* index 0: the normalized fitted coefficient vector of the sparse GLM
  fit on that half (dropped when the fit is empty), and
* indices 1..d_hat: sparse sliced-inverse-regression directions fitted
  on the distance-correlation-screened columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import resolve_family
from .lasso import FittedModel, cv_select_lambda, fit_lasso_path, lambda_grid

__all__ = [
    "SplitPlan",
    "ProjectionSet",
    "split_data",
    "screen_size",
    "distance_correlation",
    "dc_sis_screen",
    "sparse_sir",
    "build_projection_set",
]

# Directions whose |cosine| with an earlier one exceeds this are duplicates.
DEDUP_COSINE = 0.999


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """A balanced two-way split of {0, ..., n-1}; |D1| = ceil(n/2)."""

    indices_d1: np.ndarray
    indices_d2: np.ndarray
    seed: int

    @property
    def n(self) -> int:
        return self.indices_d1.size + self.indices_d2.size


@dataclass(frozen=True, eq=False)
class ProjectionSet:
    """Ordered unit-norm directions estimated on one data half.

    `directions` is the deduplicated list used by the cumulative-process
    statistics; d_hat == len(directions) - 1 by construction.  When the
    fitted coefficient vector was zero, index 0 is a SIR direction
    instead and `includes_theta0` is False.

    `sir_directions` keeps every (unit-norm) SIR direction before
    deduplication: the local-smoothing terms of the hybrid test range
    over these.  Under a well-specified model the leading SIR direction
    often coincides with the fit direction; removing it from the
    local-smoothing sums would strip the hybrid of exactly the
    directions that carry its high-frequency power.
    """

    directions: np.ndarray  # (d_hat + 1, p)
    d_hat: int
    source_half: str  # "D1" | "D2"
    sir_directions: np.ndarray | None = None  # (n_sir, p)
    includes_theta0: bool = True
    used_fallback: bool = False


def split_data(n: int, seed: int) -> SplitPlan:
    """Uniformly random balanced split, deterministic given the seed."""
    if n < 4:
        raise ValueError(f"need n >= 4 to split, got n={n}")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 0x5B1)))
    perm = rng.permutation(n)
    n1 = (n + 1) // 2
    return SplitPlan(
        indices_d1=np.sort(perm[:n1]),
        indices_d2=np.sort(perm[n1:]),
        seed=int(seed),
    )


def screen_size(n_half: int) -> int:
    """Number of covariates kept by marginal screening on a half of size n_half."""
    k = math.floor(n_half / math.log(n_half))
    return max(k, 2)


def _centered_distance_matrix(v: np.ndarray) -> np.ndarray:
    d = np.abs(v[:, None] - v[None, :])
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    return d - row - col + d.mean()


def distance_correlation(u, v) -> float:
    """Sample distance correlation in [0, 1]; 0 if either input is constant."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape[0] != v.shape[0]:
        raise ValueError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    if u.shape[0] < 3:
        raise ValueError("need at least 3 observations")
    if np.ptp(u) == 0.0 or np.ptp(v) == 0.0:
        return 0.0
    A = _centered_distance_matrix(u)
    B = _centered_distance_matrix(v)
    dcov2 = max((A * B).mean(), 0.0)
    dvar_u = (A * A).mean()
    dvar_v = (B * B).mean()
    den = math.sqrt(dvar_u * dvar_v)
    if den <= 0.0:
        return 0.0
    return float(math.sqrt(dcov2 / den))


def dc_sis_screen(X, y, k: int) -> np.ndarray:
    """Indices of the k covariates with the largest dcor(X_j, Y).

    Returned in rank order (most correlated first); ties break toward
    the smaller column index.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    p = X.shape[1]
    if not 1 <= k <= p:
        raise ValueError(f"k={k} out of range [1, {p}]")
    B = _centered_distance_matrix(y)
    dvar_y = (B * B).mean()
    vals = np.zeros(p)
    if np.ptp(y) > 0.0 and dvar_y > 0.0:
        for j in range(p):
            col = X[:, j]
            if np.ptp(col) == 0.0:
                continue
            A = _centered_distance_matrix(col)
            dcov2 = max((A * B).mean(), 0.0)
            dvar_x = (A * A).mean()
            if dvar_x > 0.0:
                vals[j] = math.sqrt(dcov2 / math.sqrt(dvar_x * dvar_y))
    order = np.argsort(-vals, kind="stable")
    return order[:k]


def _lasso_coef_at(X, y, lam: float, seed: int) -> np.ndarray:
    """Gaussian lasso coefficients at one penalty, warm-started down the grid."""
    grid = lambda_grid(X, y, "gaussian")
    path = np.concatenate([grid[grid > lam], [lam]])
    coefs, _ = fit_lasso_path(X, y, "gaussian", path)
    return coefs[-1]


def sparse_sir(X_sub, y, screened_idx, p: int, n_slices: int, max_d: int, *,
               seed: int = 0, binary: bool = False, folds: int = 10) -> list[np.ndarray]:
    """Sparse SIR directions on screened columns, embedded in R^p.

    Slices the response into `n_slices` equal-count groups (the two
    classes when `binary`) and eigendecomposes the between-slice
    covariance of the standardized screened columns; the direction
    count comes from the eigenvalue-ratio rule capped at `max_d`.

    Each retained eigen-direction is then sparsified by an L1
    least-squares regression (penalty by CV) of its *slice-mean* score
    on the screened design: observation i's pseudo-response is the
    score of its slice's mean, eta_j' xbar_{h(i)}.  Regressing the
    slice-mean score (rather than the observation's own score, which
    would make the regression an identity) lets the L1 step re-estimate
    the direction under sparsity instead of merely thresholding the
    noisy eigenvector.  All-zero sparse solutions are dropped.
    """
    X_sub = np.asarray(X_sub, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n, q = X_sub.shape
    screened_idx = np.asarray(screened_idx, dtype=int)
    if screened_idx.shape[0] != q:
        raise ValueError("screened_idx must match the columns of X_sub")

    if binary:
        n_slices = 2
        classes = np.unique(y)
        if classes.size < 2:
            raise ValueError("fewer than 2 distinct response values")
        groups = [np.flatnonzero(y == c) for c in classes]
    else:
        if n_slices < 2:
            raise ValueError("need at least 2 slices")
        if np.unique(y).size < n_slices:
            raise ValueError(f"fewer than {n_slices} distinct response values")
        order = np.argsort(y, kind="stable")
        groups = np.array_split(order, n_slices)

    means = X_sub.mean(axis=0)
    scales = X_sub.std(axis=0)
    scales = np.where(scales > 1e-12, scales, 1.0)
    Xstd = (X_sub - means) / scales

    grand = Xstd.mean(axis=0)
    lam_mat = np.zeros((q, q))
    slice_means = np.zeros((len(groups), q))
    slice_of = np.zeros(n, dtype=int)
    for h, g in enumerate(groups):
        slice_means[h] = Xstd[g].mean(axis=0)
        slice_of[g] = h
        diff = slice_means[h] - grand
        lam_mat += (g.size / n) * np.outer(diff, diff)

    evals, evecs = np.linalg.eigh(lam_mat)
    order_desc = np.argsort(evals)[::-1]
    evals = np.clip(evals[order_desc], 0.0, None)
    evecs = evecs[:, order_desc]

    max_d_eff = min(max_d, len(groups) - 1, q - 1)
    if max_d_eff < 1:
        d_hat = 1 if q >= 1 else 0
    else:
        guard = 1e-12 * evals[0] + 1e-300
        ratios = evals[:max_d_eff] / np.maximum(evals[1:max_d_eff + 1], guard)
        d_hat = int(np.argmax(ratios)) + 1

    directions = []
    for j in range(d_hat):
        pseudo = slice_means[slice_of] @ evecs[:, j]
        if np.ptp(pseudo) <= 0.0:
            continue
        child = int(np.random.SeedSequence((int(seed), j)).generate_state(1)[0])
        lam = cv_select_lambda(X_sub, pseudo, "gaussian", folds=min(folds, n),
                               seed=child, rule="min")
        coef = _lasso_coef_at(X_sub, pseudo, lam, child)
        norm = np.linalg.norm(coef)
        if norm <= 0.0:
            continue  # all-zero direction: drop and decrement
        full = np.zeros(p)
        full[screened_idx] = coef / norm
        directions.append(full)
    return directions


def build_projection_set(model: FittedModel, sir_dirs, half: str, *,
                         fallback_index: int | None = None) -> ProjectionSet:
    """Assemble the direction list: normalized beta_hat first, then SIR.

    Near-collinear directions (|cosine| > 0.999 with an earlier one)
    are removed, keeping the earliest.  If everything degenerates the
    set falls back to the coordinate direction `fallback_index`.
    """
    if half not in ("D1", "D2"):
        raise ValueError("half must be 'D1' or 'D2'")
    p = model.coefficients.shape[0]
    candidates: list[np.ndarray] = []
    includes_theta0 = False
    norm = np.linalg.norm(model.coefficients)
    if norm > 0.0:
        candidates.append(model.coefficients / norm)
        includes_theta0 = True
    for d in sir_dirs:
        d = np.asarray(d, dtype=float)
        dn = np.linalg.norm(d)
        if dn > 0.0:
            candidates.append(d / dn)

    kept: list[np.ndarray] = []
    for c in candidates:
        if all(abs(float(c @ k)) <= DEDUP_COSINE for k in kept):
            kept.append(c)

    used_fallback = False
    if not kept:
        if fallback_index is None:
            raise ValueError("no usable projection direction and no fallback index")
        e = np.zeros(p)
        e[int(fallback_index)] = 1.0
        kept = [e]
        used_fallback = True
        includes_theta0 = False

    directions = np.asarray(kept)
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    n_theta0 = 1 if includes_theta0 else 0
    sir_directions = np.asarray(candidates[n_theta0:]) if len(candidates) > n_theta0 else None
    return ProjectionSet(
        directions=directions,
        d_hat=directions.shape[0] - 1,
        source_half=half,
        sir_directions=sir_directions,
        includes_theta0=includes_theta0,
        used_fallback=used_fallback,
    )
