"""The projected residual-marked empirical process.

Project the covariates onto a unit direction, order the sample by the
projected coordinate, and accumulate the normalized residual partial
sums R_k = n^(-1/2) * sum_{j<=k} eps_(j) together with the weight
measure psi_k = n^(-1) * sum_{j<=k} eps_(j)^2.  Everything downstream
(the martingale-style transform and the Cramer-von Mises functional)
consumes this table.

Tie convention: the sort is stable and indicators are <=, so tied
projected values enter together; evaluating at an arbitrary t uses the
left-closed step convention (value at the last sorted point <= t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ProcessTable", "project", "marked_process", "t0_quantile", "step_value"]

# Truncate the evaluation range at this quantile of the projected sample.
T0_QUANTILE = 0.99


@dataclass(frozen=True, eq=False)
class ProcessTable:
    """Sorted projected sample with cumulative process values.

    t0_index is the 0-based position of the truncation point, i.e.
    ceil(0.99 n) - 1; t0 is the corresponding order statistic.
    `order` maps sorted position -> original row, so companion arrays
    can be aligned via arr[order].
    """

    z_sorted: np.ndarray
    eps_sorted: np.ndarray
    R: np.ndarray
    psi: np.ndarray
    t0_index: int
    t0: float
    order: np.ndarray

    @property
    def n(self) -> int:
        return self.z_sorted.shape[0]


def project(X, alpha) -> np.ndarray:
    """Projected coordinates X @ alpha for a unit-norm direction."""
    X = np.asarray(X, dtype=float)
    alpha = np.asarray(alpha, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != alpha.shape[0]:
        raise ValueError(
            f"dimension mismatch: X is {X.shape}, alpha has length {alpha.shape[0]}"
        )
    norm = np.linalg.norm(alpha)
    if abs(norm - 1.0) > 1e-8:
        raise ValueError(f"alpha must have unit norm, got ||alpha|| = {norm}")
    return X @ alpha


def t0_quantile(z) -> tuple[float, int]:
    """Truncation point: the ceil(0.99 n)-th order statistic of z.

    Returns (t0, t0_index) with t0_index 0-based in the sorted order.
    """
    z = np.asarray(z, dtype=float).ravel()
    n = z.shape[0]
    if n < 2:
        raise ValueError("need n >= 2")
    idx = math.ceil(T0_QUANTILE * n) - 1
    t0 = float(np.sort(z, kind="stable")[idx])
    return t0, idx


def marked_process(z, eps) -> ProcessTable:
    """Build the process table from projected points and residuals."""
    z = np.asarray(z, dtype=float).ravel()
    eps = np.asarray(eps, dtype=float).ravel()
    n = z.shape[0]
    if n < 2:
        raise ValueError("need n >= 2")
    if eps.shape[0] != n:
        raise ValueError("z and eps must have equal length")
    order = np.argsort(z, kind="stable")
    z_sorted = z[order]
    eps_sorted = eps[order]
    R = np.cumsum(eps_sorted) / math.sqrt(n)
    psi = np.cumsum(eps_sorted * eps_sorted) / n
    t0_index = math.ceil(T0_QUANTILE * n) - 1
    return ProcessTable(
        z_sorted=z_sorted,
        eps_sorted=eps_sorted,
        R=R,
        psi=psi,
        t0_index=t0_index,
        t0=float(z_sorted[t0_index]),
        order=order,
    )


def step_value(z_sorted, values, t) -> float:
    """Left-closed step evaluation: value at the last sorted point <= t.

    Returns 0 for t below the smallest point (empty cumulative sum).
    Tied points share the value at the end of their tie group.
    """
    idx = int(np.searchsorted(z_sorted, t, side="right")) - 1
    if idx < 0:
        return 0.0
    return float(values[idx])
