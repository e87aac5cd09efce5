"""Numba kernels for L1-penalized coordinate descent.

All kernels operate on column-standardized designs in Fortran order
(columns contiguous) with (1/n) * sum(x_j^2) == 1 per column, so the
gaussian coordinate update has unit curvature.  The objective solved
at each grid point lam is

    (1/n) * sum_i nll_i(a + x_i' b)  +  lam * ||b||_1

with the intercept a unpenalized.  Gaussian nll is (1/2)(y - eta)^2;
binomial nll is log(1 + exp(eta)) - y * eta, handled by IRLS around
the weighted gaussian solver.

Each lambda is solved by: one sweep over a sequential-strong-rule set,
capped cyclic passes over the current active set, then a full pass
that both checks convergence and admits strong-rule violators.  The
per-lambda work is capped (`max_outer`, `max_active`); callers that
need a fully converged solution at one lambda re-enter with large
caps, which is cheap because of warm starts.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["gauss_lasso_path", "binom_lasso_path"]


@njit(cache=True)
def _soft(x, t):
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


@njit(cache=True)
def gauss_lasso_path(Xs, yc, lambdas, tol, max_outer, max_active):
    """Lasso path on centered response yc; returns (L, p) coefficients.

    Xs columns must satisfy (1/n) * sum(x_j^2) == 1 (or be all-zero,
    in which case the coordinate stays at 0).
    """
    n, p = Xs.shape
    L = lambdas.shape[0]
    B = np.zeros((L, p))
    b = np.zeros(p)
    r = yc.copy()
    strong = np.zeros(p, dtype=np.bool_)
    excluded = np.zeros(p, dtype=np.bool_)
    inv_n = 1.0 / n
    for j in range(p):
        s2 = 0.0
        for i in range(n):
            s2 += Xs[i, j] * Xs[i, j]
        excluded[j] = s2 * inv_n < 1e-12
    lam_prev = lambdas[0]
    for l in range(L):
        lam = lambdas[l]
        thr = 2.0 * lam - lam_prev
        for j in range(p):
            if excluded[j]:
                strong[j] = False
                continue
            g = 0.0
            for i in range(n):
                g += Xs[i, j] * r[i]
            strong[j] = (abs(g * inv_n) >= thr) or (b[j] != 0.0)
        for outer in range(max_outer):
            # one pass over the strong set
            for j in range(p):
                if not strong[j]:
                    continue
                bj = b[j]
                g = 0.0
                for i in range(n):
                    g += Xs[i, j] * r[i]
                nb = _soft(bj + g * inv_n, lam)
                d = nb - bj
                if d != 0.0:
                    b[j] = nb
                    for i in range(n):
                        r[i] -= d * Xs[i, j]
            # capped passes over the active set
            maxda = tol
            for it in range(max_active):
                maxda = 0.0
                for j in range(p):
                    if b[j] == 0.0:
                        continue
                    bj = b[j]
                    g = 0.0
                    for i in range(n):
                        g += Xs[i, j] * r[i]
                    nb = _soft(bj + g * inv_n, lam)
                    d = nb - bj
                    if d != 0.0:
                        b[j] = nb
                        for i in range(n):
                            r[i] -= d * Xs[i, j]
                        if abs(d) > maxda:
                            maxda = abs(d)
                if maxda < tol:
                    break
            # full pass: admit strong-rule violators
            viol = False
            for j in range(p):
                if excluded[j] or strong[j]:
                    continue
                g = 0.0
                for i in range(n):
                    g += Xs[i, j] * r[i]
                if abs(g * inv_n) > lam:
                    strong[j] = True
                    viol = True
            if (not viol) and maxda < tol:
                break
        B[l] = b
        lam_prev = lam
    return B


@njit(cache=True)
def _wls_sweeps(Xs, z, wts, b, a, r, lam, tol, max_sweeps, excluded):
    """Cyclic CD passes for weighted least squares with L1 penalty.

    Minimizes (1/2n) sum w_i (z_i - a - x_i'b)^2 + lam ||b||_1 where r
    holds the current working residual z - a - Xs b.  Returns (a, delta)
    with delta the max coefficient change of the final pass.
    """
    n, p = Xs.shape
    inv_n = 1.0 / n
    wsum = 0.0
    for i in range(n):
        wsum += wts[i]
    v = np.zeros(p)
    for j in range(p):
        if excluded[j]:
            continue
        s = 0.0
        for i in range(n):
            s += wts[i] * Xs[i, j] * Xs[i, j]
        v[j] = s * inv_n
    maxd = 0.0
    for sweep in range(max_sweeps):
        maxd = 0.0
        # intercept (unpenalized)
        da = 0.0
        for i in range(n):
            da += wts[i] * r[i]
        da /= wsum
        if da != 0.0:
            a += da
            for i in range(n):
                r[i] -= da
            if abs(da) > maxd:
                maxd = abs(da)
        for j in range(p):
            if excluded[j] or v[j] <= 0.0:
                continue
            bj = b[j]
            g = 0.0
            for i in range(n):
                g += wts[i] * Xs[i, j] * r[i]
            nb = _soft(v[j] * bj + g * inv_n, lam) / v[j]
            d = nb - bj
            if d != 0.0:
                b[j] = nb
                for i in range(n):
                    r[i] -= d * Xs[i, j]
                if abs(d) > maxd:
                    maxd = abs(d)
        if maxd < tol:
            break
    return a, maxd


@njit(cache=True)
def binom_lasso_path(Xs, y, lambdas, tol, max_irls, max_sweeps):
    """Logistic lasso path by IRLS around weighted CD.

    Returns (B, a) with B of shape (L, p) and a of shape (L,): the
    coefficients and unpenalized intercepts at each lambda, on the
    standardized scale of Xs.
    """
    n, p = Xs.shape
    L = lambdas.shape[0]
    B = np.zeros((L, p))
    A = np.zeros(L)
    b = np.zeros(p)
    excluded = np.zeros(p, dtype=np.bool_)
    inv_n = 1.0 / n
    for j in range(p):
        s2 = 0.0
        for i in range(n):
            s2 += Xs[i, j] * Xs[i, j]
        excluded[j] = s2 * inv_n < 1e-12
    ybar = 0.0
    for i in range(n):
        ybar += y[i]
    ybar /= n
    if ybar <= 0.0 or ybar >= 1.0:
        # single-class response: intercept diverges, leave at +-30
        a = 30.0 if ybar >= 1.0 else -30.0
    else:
        a = np.log(ybar / (1.0 - ybar))
    eta = np.full(n, a)
    mu = np.empty(n)
    wts = np.empty(n)
    r = np.empty(n)
    b_prev = np.empty(p)
    for l in range(L):
        lam = lambdas[l]
        for it in range(max_irls):
            # working response and weights at the current (a, b)
            for i in range(n):
                e = eta[i]
                if e > 30.0:
                    m = 1.0
                elif e < -30.0:
                    m = 0.0
                else:
                    m = 1.0 / (1.0 + np.exp(-e))
                mu[i] = m
                w = m * (1.0 - m)
                if w < 1e-5:
                    w = 1e-5
                wts[i] = w
                r[i] = (y[i] - mu[i]) / w
            for j in range(p):
                b_prev[j] = b[j]
            a_new, _ = _wls_sweeps(Xs, eta, wts, b, a, r, lam, tol, max_sweeps, excluded)
            # refresh eta from scratch to avoid drift
            for i in range(n):
                e = a_new
                for j in range(p):
                    if b[j] != 0.0:
                        e += Xs[i, j] * b[j]
                eta[i] = e
            delta = abs(a_new - a)
            for j in range(p):
                dj = abs(b[j] - b_prev[j])
                if dj > delta:
                    delta = dj
            a = a_new
            if delta < tol:
                break
        B[l] = b
        A[l] = a
    return B, A
