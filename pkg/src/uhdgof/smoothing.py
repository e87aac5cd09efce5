"""Epanechnikov kernel smoothing for the nuisance curves.

The heteroscedastic transform needs three conditional-mean curves along
the projected coordinate: the conditional residual variance, the
conditional mean of mu'(eta), and the conditional mean of the fitted
index times mu'(eta).  All are one-dimensional Nadaraya-Watson
estimates sharing a single leave-one-out cross-validated bandwidth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "epanechnikov",
    "nw_estimate",
    "cv_bandwidth",
    "estimate_nuisance_curves",
    "NuisanceCurves",
    "BANDWIDTH_FACTORS",
]

# Bandwidth grid h = c * sd(z) * n^(-1/5) over these factors.
BANDWIDTH_FACTORS = (0.5, 0.75, 1.0, 1.5, 2.0, 3.0)

# sigma2 floor: 1e-4 * mean(eps^2) + 1e-12, keeps A finite.
_SIGMA2_FLOOR_REL = 1e-4
_SIGMA2_FLOOR_ABS = 1e-12


@dataclass(frozen=True, eq=False)
class NuisanceCurves:
    """Smoothed nuisance curves evaluated at the sorted projected sample."""

    eval_points: np.ndarray
    sigma2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    bandwidth: float

    def __post_init__(self) -> None:
        n = self.eval_points.shape[0]
        for name in ("sigma2", "g1", "g2"):
            if getattr(self, name).shape[0] != n:
                raise ValueError(f"{name} length does not match eval_points")
        if np.any(np.diff(self.eval_points) < 0):
            raise ValueError("eval_points must be nondecreasing")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")


def epanechnikov(x):
    """(3/4)(1 - x^2) on [-1, 1], zero outside."""
    x = np.asarray(x, dtype=float)
    out = np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)
    if out.ndim == 0:
        return float(out)
    return out


def _nw_many(z, w, tgrid, h):
    """NW estimates at each t in tgrid with nearest-neighbor fallback."""
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    tgrid = np.asarray(tgrid, dtype=float).ravel()
    K = epanechnikov((tgrid[:, None] - z[None, :]) / h) / h
    den = K.sum(axis=1)
    num = K @ w
    out = np.empty(tgrid.shape[0])
    ok = den > 0.0
    out[ok] = num[ok] / den[ok]
    if not np.all(ok):
        for i in np.flatnonzero(~ok):
            out[i] = w[np.argmin(np.abs(z - tgrid[i]))]
    return out


def nw_estimate(z, w, t: float, h: float) -> float:
    """Nadaraya-Watson estimate at a single point t.

    Falls back to the w-value at the nearest z when no observation is
    within bandwidth reach of t.
    """
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if z.size == 0:
        raise ValueError("empty input")
    if z.shape != w.shape:
        raise ValueError("z and w must have equal length")
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    return float(_nw_many(z, w, np.array([t]), h)[0])


def cv_bandwidth(z, w, factors=BANDWIDTH_FACTORS) -> float:
    """Leave-one-out CV bandwidth over the grid c * sd(z) * n^(-1/5).

    Deterministic.  Among grid values whose LOO squared prediction
    error is within 2% of the minimum, the largest bandwidth wins: when
    the target curve is flat the LOO error curve is flat too, and the
    literal argmin is then sampling noise that would pick an
    arbitrarily wiggly estimate.
    """
    z = np.asarray(z, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    n = z.shape[0]
    if n < 10:
        raise ValueError(f"need n >= 10 for bandwidth selection, got {n}")
    sd = float(np.std(z))
    if sd <= 0.0:
        raise ValueError("sd(z) = 0: bandwidth grid is degenerate")
    base = sd * n ** (-0.2)
    diffs = z[:, None] - z[None, :]
    hs, errs = [], []
    for c in factors:
        h = c * base
        K = epanechnikov(diffs / h) / h
        np.fill_diagonal(K, 0.0)
        den = K.sum(axis=1)
        num = K @ w
        pred = np.empty(n)
        ok = den > 0.0
        pred[ok] = num[ok] / den[ok]
        for i in np.flatnonzero(~ok):
            others = np.abs(z - z[i])
            others[i] = np.inf
            pred[i] = w[np.argmin(others)]
        hs.append(h)
        errs.append(float(np.mean((w - pred) ** 2)))
    errs = np.asarray(errs)
    near_min = errs <= errs.min() * 1.02 + 1e-300
    return float(max(h for h, good in zip(hs, near_min) if good))


def estimate_nuisance_curves(z, eps, muprime, index_vals) -> NuisanceCurves:
    """All three nuisance curves at the sample points, sharing one bandwidth.

    `z` must be ascending (the sorted projected sample); the companion
    vectors must be in the same order.  The variance curve is floored
    at 1e-4 * mean(eps^2) + 1e-12.
    """
    z = np.asarray(z, dtype=float).ravel()
    eps = np.asarray(eps, dtype=float).ravel()
    muprime = np.asarray(muprime, dtype=float).ravel()
    index_vals = np.asarray(index_vals, dtype=float).ravel()
    n = z.shape[0]
    if not (eps.shape[0] == muprime.shape[0] == index_vals.shape[0] == n):
        raise ValueError("all inputs must have the same length")
    eps2 = eps * eps
    h = cv_bandwidth(z, eps2)
    sigma2 = _nw_many(z, eps2, z, h)
    g1 = _nw_many(z, muprime, z, h)
    g2 = _nw_many(z, index_vals * muprime, z, h)
    floor = _SIGMA2_FLOOR_REL * float(eps2.mean()) + _SIGMA2_FLOOR_ABS
    sigma2 = np.maximum(sigma2, floor)
    return NuisanceCurves(eval_points=z, sigma2=sigma2, g1=g1, g2=g2, bandwidth=h)
