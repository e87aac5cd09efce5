"""Innovation transform of the projected process and the CvM statistic.

The raw projected residual process carries a drift term coming from
parameter estimation.  The transform applied here subtracts, at each
point of the sorted projected sample, the compensator

    sum_{i <= k} dpsi_i * A_i' Gamma_i^{-1} H_i,

where A is the score direction along the projected coordinate,
Gamma_k = (1/n) * sum_{z_j >= z_k} m_j A_j A_j' is a right-tail outer
product against the weight measure (masses m_j), and
H_k = n^(-1/2) * sum_{z_j >= z_k} eps_j A_j is the right-tail integral
of A against the residual process increments.  The compensated process
behaves like a Brownian motion in the time scale of the weight measure,
so the normalized Cramer-von Mises functional is asymptotically
distribution-free with the law of the integrated squared Brownian
motion on [0, 1].

Two modes are supported:

* "general": A(t) = (g1(t), t g1(t), g2(t)) / sigma2(t) with
  Nadaraya-Watson nuisance curves and weight masses m_j = eps_j^2, and
* "homoscedastic" (gaussian fits): A(t) = (1, t) / sigma2 with a
  constant variance estimate and weight masses m_j = sigma2, i.e. the
  weight measure sigma2 * F_hat.

The leading component of A in each mode is the intercept score.  The
fitted models here always estimate an intercept, which centers the
residuals (their sum is a score equation), so the process carries a
drift along the conditional mean of mu' (a constant for gaussian
models) on top of the slope-direction drift; both lie in the span of
A and are annihilated.  Without the intercept component the centering
drift survives and deflates the statistic far below its reference law.

Both integrals are discretized by the empirical measures with jumps at
the sample points; right tails are closed (z_j >= z_k), with tied
points grouped.  Evaluation stops at the upper-quantile truncation
point of the process table, where the right-tail matrix degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import Family
from .lasso import FittedModel, residuals
from .process import ProcessTable, marked_process, project
from .smoothing import NuisanceCurves, estimate_nuisance_curves

__all__ = [
    "TransformState",
    "UntransformableProjectionError",
    "ProjectedTestResult",
    "compute_A",
    "compute_gamma_and_H",
    "transform_process",
    "tcvm_statistic",
    "projected_tcvm_test",
]

# Regularization of the right-tail matrix: add delta * I when the
# condition number exceeds COND_MAX or the determinant falls below
# DET_REL * (trace/m)^m; delta = DELTA_REL * max(1, trace).
COND_MAX = 1e12
DET_REL = 1e-12
DELTA_REL = 1e-10


class UntransformableProjectionError(RuntimeError):
    """The right-tail matrix is numerically singular along the path."""

    def __init__(self, projection_id=None):
        self.projection_id = projection_id
        suffix = "" if projection_id is None else f" (projection {projection_id})"
        super().__init__("singular right-tail matrix in transform" + suffix)


@dataclass(frozen=True, eq=False)
class TransformState:
    """Per-point pieces of the transform, kept for inspection and tests."""

    A_vals: np.ndarray       # (n, m)
    gamma: np.ndarray        # (n, m, m)
    H_vals: np.ndarray       # (n, m)
    transformed: np.ndarray  # (n,), nan beyond the truncation index


@dataclass(frozen=True)
class ProjectedTestResult:
    statistic: float
    pvalue: float
    degenerate: bool = False


def compute_A(curves_or_points, mode: str, sigma2: float | None = None) -> np.ndarray:
    """Score direction A at the sorted sample points, shape (n, m).

    general mode: pass NuisanceCurves;
        A = (g1, t*g1, g2) / sigma2(t), columns 1:3 being the slope
        scores and column 0 the intercept score.
    homoscedastic mode: pass the sorted points plus the constant
    variance estimate; A = (1, t) / sigma2, column 1 the slope score.
    """
    if mode == "general":
        curves = curves_or_points
        if not isinstance(curves, NuisanceCurves):
            raise TypeError("general mode expects NuisanceCurves")
        t = curves.eval_points
        return np.column_stack([curves.g1 / curves.sigma2,
                                t * curves.g1 / curves.sigma2,
                                curves.g2 / curves.sigma2])
    if mode == "homoscedastic":
        t = np.asarray(curves_or_points, dtype=float).ravel()
        if sigma2 is None or sigma2 <= 0:
            raise ValueError("homoscedastic mode needs a positive sigma2")
        return np.column_stack([np.full(t.shape[0], 1.0 / sigma2), t / sigma2])
    raise ValueError(f"unknown mode: {mode!r}")


def _tie_group_starts(z_sorted: np.ndarray) -> np.ndarray:
    """For each sorted position, the first position of its tie group."""
    n = z_sorted.shape[0]
    new_group = np.empty(n, dtype=bool)
    new_group[0] = True
    new_group[1:] = np.diff(z_sorted) != 0
    starts = np.flatnonzero(new_group)
    run_id = np.cumsum(new_group) - 1
    return starts[run_id]


def _right_tail_sum(values: np.ndarray, group_start: np.ndarray) -> np.ndarray:
    """sum over {j : z_j >= z_k} of values_j, ties grouped (axis 0)."""
    rev = np.cumsum(values[::-1], axis=0)[::-1]
    return rev[group_start]


def compute_gamma_and_H(table: ProcessTable, A_vals: np.ndarray, *,
                        psi_marks: np.ndarray | None = None,
                        increments: np.ndarray | None = None):
    """Right-tail matrix Gamma_k and vector H_k at every sorted point.

    Gamma_k = (1/n) sum_{z_j >= z_k} m_j A_j A_j' with masses m_j
    defaulting to eps_j^2 (the weight-measure jumps); H_k =
    n^(-1/2) sum_{z_j >= z_k} inc_j A_j with increments defaulting to
    the residuals (the jumps of the residual process).  Tied points
    are grouped so the closed right tail is respected exactly.
    """
    n = table.n
    A = np.asarray(A_vals, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    m = A.shape[1]
    marks = table.eps_sorted ** 2 if psi_marks is None else np.asarray(psi_marks, dtype=float)
    inc = table.eps_sorted if increments is None else np.asarray(increments, dtype=float)
    group_start = _tie_group_starts(table.z_sorted)

    outer = A[:, :, None] * A[:, None, :] * marks[:, None, None]
    gamma = _right_tail_sum(outer, group_start) / n
    H = _right_tail_sum(A * inc[:, None], group_start) / math.sqrt(n)
    return gamma, H


def _regularized_quad(A, gamma, H):
    """q_k = A_k' Gamma_k^{-1} H_k with the singularity policy applied.

    Points with A_k = 0 contribute zero regardless of Gamma_k.
    """
    n, m = A.shape
    if m == 1:
        a = A[:, 0]
        g = gamma[:, 0, 0]
        h = H[:, 0]
        gsafe = np.where(g > 0.0, g, DELTA_REL)
        q = a * h / gsafe
        q[a == 0.0] = 0.0
        return q
    tr = np.trace(gamma, axis1=1, axis2=2)
    det = np.linalg.det(gamma)
    scale = np.maximum(tr / m, 0.0) ** m
    bad = (det <= DET_REL * scale) | (det * COND_MAX < scale)
    if np.any(bad):
        delta = DELTA_REL * np.maximum(1.0, tr[bad])
        gamma = gamma.copy()
        gamma[bad] += delta[:, None, None] * np.eye(m)
    try:
        x = np.linalg.solve(gamma, H[..., None])[..., 0]
    except np.linalg.LinAlgError:
        # exactly singular rows survive the policy only when the whole
        # tail mass vanished; fall back to pseudo-solutions there
        x = np.full_like(H, np.nan)
        for i in range(n):
            try:
                x[i] = np.linalg.solve(gamma[i], H[i])
            except np.linalg.LinAlgError:
                x[i] = np.linalg.lstsq(gamma[i], H[i], rcond=None)[0]
    q = np.einsum("ij,ij->i", A, x)
    q[np.all(A == 0.0, axis=1)] = 0.0
    return q


def transform_process(table: ProcessTable, A_vals, gamma, H_vals, *,
                      psi_marks: np.ndarray | None = None,
                      process: np.ndarray | None = None,
                      projection_id=None) -> np.ndarray:
    """Compensated process at the sorted points, up to the truncation index.

    Entries beyond table.t0_index are nan.  `process` defaults to the
    residual partial sums; passing another cumulative process (with the
    matching `increments` already folded into H) transforms it instead.
    Raises UntransformableProjectionError if the result is non-finite
    within the truncation range even after regularization.
    """
    n = table.n
    A = np.asarray(A_vals, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    marks = table.eps_sorted ** 2 if psi_marks is None else np.asarray(psi_marks, dtype=float)
    base = table.R if process is None else np.asarray(process, dtype=float)

    q = _regularized_quad(A, np.asarray(gamma, dtype=float), np.asarray(H_vals, dtype=float))
    compensator = np.cumsum(marks / n * q)
    out = base - compensator
    k = table.t0_index
    if not np.all(np.isfinite(out[: k + 1])):
        raise UntransformableProjectionError(projection_id)
    out[k + 1:] = np.nan
    return out


def tcvm_statistic(transformed, table: ProcessTable, mode: str,
                   sigma2: float | None = None) -> tuple[float, bool]:
    """Normalized CvM functional of the transformed process.

    general:       psi(t0)^(-2) * (1/n) * sum_{k<=t0} eps_k^2 |T_k|^2
    homoscedastic: (sigma2 * F(t0)^2)^(-1) * (1/n) * sum_{k<=t0} |T_k|^2

    Returns (statistic, degenerate); degenerate means the weight
    measure vanished (all residuals zero) and the statistic is 0.
    """
    transformed = np.asarray(transformed, dtype=float)
    k = table.t0_index
    n = table.n
    vals = transformed[: k + 1] ** 2
    if mode == "general":
        psi_t0 = table.psi[k]
        if psi_t0 <= 0.0:
            return 0.0, True
        stat = float(np.sum(table.eps_sorted[: k + 1] ** 2 * vals) / n / psi_t0 ** 2)
        return stat, False
    if mode == "homoscedastic":
        if sigma2 is None:
            raise ValueError("homoscedastic mode needs sigma2")
        if sigma2 <= 0.0:
            return 0.0, True
        f_t0 = (k + 1) / n
        stat = float(np.sum(vals) / n / (sigma2 * f_t0 ** 2))
        return stat, False
    raise ValueError(f"unknown mode: {mode!r}")


def default_mode(family: Family) -> str:
    """homoscedastic for gaussian fits, general otherwise."""
    return "homoscedastic" if family.kind == "gaussian" else "general"


def projected_tcvm_test(X, y, model: FittedModel, alpha, mode: str | None = None, *,
                        projection_id=None, law=None,
                        return_state: bool = False):
    """Full single-projection pipeline: project, transform, statistic, p-value.

    The p-value is the upper tail of the integrated squared Brownian
    motion law at the statistic, clipped away from {0, 1}.  `model`
    must be fitted on the same rows (X, y) passed here.
    """
    from .nulldist import clip_pvalue, default_law

    if law is None:
        law = default_law()
    if mode is None:
        mode = default_mode(model.family)

    z = project(X, alpha)
    eps = residuals(model, X, y)
    table = marked_process(z, eps)

    sigma2 = float(np.mean(eps * eps))
    if sigma2 <= 0.0:
        result = ProjectedTestResult(0.0, clip_pvalue(1.0 - law.cdf(0.0)), True)
        return (result, None) if return_state else result

    if mode == "homoscedastic":
        A = compute_A(table.z_sorted, mode, sigma2=sigma2)
        marks = np.full(table.n, sigma2)
    elif mode == "general":
        eta = model.eta(X)
        mup = model.family.mu_prime(eta)[table.order]
        index_vals = model.linear_index(X)[table.order]
        curves = estimate_nuisance_curves(table.z_sorted, table.eps_sorted, mup, index_vals)
        A = compute_A(curves, mode)
        marks = None
    else:
        raise ValueError(f"unknown mode: {mode!r}")

    gamma, H = compute_gamma_and_H(table, A, psi_marks=marks)
    transformed = transform_process(table, A, gamma, H, psi_marks=marks,
                                    projection_id=projection_id)
    stat, degenerate = tcvm_statistic(transformed, table, mode, sigma2=sigma2)
    pvalue = clip_pvalue(1.0 - law.cdf(stat))
    result = ProjectedTestResult(stat, pvalue, degenerate)
    if return_state:
        return result, TransformState(A_vals=A, gamma=gamma, H_vals=H, transformed=transformed)
    return result
