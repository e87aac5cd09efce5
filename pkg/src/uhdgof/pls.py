"""Projected local-smoothing statistic (standard normal under the null).

A U-statistic of kernel-weighted residual products along a projected
coordinate, self-normalized so its null limit is N(0, 1).  It reacts to
high-frequency departures that cumulative-process statistics wash out,
which is why the hybrid test mixes its p-values in.
"""

from __future__ import annotations

import math

import numpy as np

from .nulldist import clip_pvalue, normal_cdf
from .smoothing import epanechnikov

__all__ = ["pls_statistic", "pls_pvalue", "pls_bandwidth"]


def pls_bandwidth(z) -> float:
    """Scale-adjusted bandwidth sd(z) * n^(-2/9) for the local test."""
    z = np.asarray(z, dtype=float).ravel()
    return float(np.std(z)) * z.shape[0] ** (-2.0 / 9.0)


def pls_statistic(z, eps, h: float) -> tuple[float, bool]:
    """Self-normalized kernel U-statistic of residual products.

        sum_{i != j} e_i e_j K((z_i - z_j)/h)
        --------------------------------------------------
        (2 sum_{i != j} e_i^2 e_j^2 K((z_i - z_j)/h)^2)^(1/2)

    Returns (statistic, degenerate); a vanishing denominator yields
    (0.0, True).
    """
    z = np.asarray(z, dtype=float).ravel()
    eps = np.asarray(eps, dtype=float).ravel()
    n = z.shape[0]
    if eps.shape[0] != n:
        raise ValueError("z and eps must have equal length")
    if n < 2:
        raise ValueError("need n >= 2")
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    K = epanechnikov((z[:, None] - z[None, :]) / h)
    np.fill_diagonal(K, 0.0)
    num = float(eps @ K @ eps)
    e2 = eps * eps
    den2 = 2.0 * float(e2 @ (K * K) @ e2)
    if den2 <= 0.0:
        return 0.0, True
    return num / math.sqrt(den2), False


def pls_pvalue(stat: float) -> float:
    """One-sided upper p-value from the standard normal."""
    if not math.isfinite(stat):
        raise ValueError("statistic must be finite")
    return clip_pvalue(1.0 - normal_cdf(stat))
