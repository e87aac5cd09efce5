"""Reference distributions and the Cauchy p-value combination.

The central object is the law of the integrated squared Brownian
motion, Q = int_0^1 B(t)^2 dt, which is the asymptotic null law of
the transformed CvM statistics.  By the Karhunen-Loeve expansion of
Brownian motion,

    Q  =  sum_{k>=1} lam_k Z_k^2,     lam_k = 4 / ((2k-1)^2 pi^2),

with Z_k i.i.d. standard normal.  The series is truncated at K terms
and the (deterministic) mean of the discarded tail, sum_{k>K} lam_k,
is added back as a shift; the tail weights decay like k^-2 so the CDF
error stays below ~1e-5 at K = 200.  The CDF of the truncated
quadratic form is computed by numerical inversion of its
characteristic function (the classic oscillatory-integral formula for
weighted chi-square sums):

    P(Q0 <= x) = 1/2 - (1/pi) * int_0^inf sin(theta(u)) / (u rho(u)) du,
    theta(u)   = (1/2) sum_k atan(lam_k u) - x u / 2,
    rho(u)     = prod_k (1 + lam_k^2 u^2)^(1/4).

Moments for cross-checks: E[Q] = sum lam_k = 1/2 and
Var[Q] = 2 sum lam_k^2 = 1/3.

Also here: the standard normal CDF, the standard Cauchy survival
function, and the Cauchy combination of p-values
T = sum_i w_i tan((1/2 - p_i) pi), whose tail matches a standard
Cauchy even under dependence, so the combined p-value is the Cauchy
upper tail at T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, roots_legendre

__all__ = [
    "CvmBmLaw",
    "default_law",
    "cvm_bm_cdf",
    "cvm_bm_quantile",
    "cauchy_combine",
    "normal_cdf",
    "cauchy_sf",
    "clip_pvalue",
]

# p-values are clipped into [PCLIP, 1 - PCLIP] before tan() to keep the
# Cauchy combination finite in double precision.
PCLIP = 1e-15

_TABLE_HEADER = "# cvm-bm-law K={K} v1"

# Composite Gauss-Legendre rule for the inversion integral.  The
# integrand envelope exp(-sqrt(u)/pi)/u makes the tail beyond U_MAX
# contribute < 1e-9; panels of width 0.2 resolve the sin(x*u/2)
# oscillation for every statistic below X_SATURATED, beyond which the
# upper tail of the law is < 1e-15 and the CDF is returned as 1.
_U_MAX = 4000.0
_PANEL = 0.2
_GL_ORDER = 10
_X_SATURATED = 30.0


def clip_pvalue(p: float) -> float:
    return float(min(max(p, PCLIP), 1.0 - PCLIP))


def normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    return ndtr(x) if np.ndim(x) else float(ndtr(x))


def cauchy_sf(x):
    """Standard Cauchy survival function 1/2 - atan(x)/pi."""
    return 0.5 - np.arctan(x) / np.pi if np.ndim(x) else 0.5 - math.atan(x) / math.pi


@dataclass(eq=False)
class CvmBmLaw:
    """Law of int_0^1 B^2 with a K-term eigen-expansion (see module docs).

    Immutable after construction; the quantile table is built lazily
    and cached on first use.
    """

    eigen_count: int = 200
    weights: np.ndarray = field(init=False, repr=False)
    tail_shift: float = field(init=False)
    _cdf_grid: tuple | None = field(default=None, init=False, repr=False)
    _nodes: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        k = np.arange(1, self.eigen_count + 1)
        self.weights = 4.0 / ((2.0 * k - 1.0) ** 2 * math.pi ** 2)
        self.tail_shift = 0.5 - float(self.weights.sum())

    # -- CDF ------------------------------------------------------------

    def _build_nodes(self, panel: float):
        """Quadrature nodes with the x-independent integrand pieces.

        With rho(u) = prod (1 + lam_k^2 u^2)^(1/4) and
        g(u) = (1/2) sum atan(lam_k u), the integrand for statistic x
        is sin(g(u) - x u / 2) * [1 / (u rho(u))]; g and the bracketed
        envelope are precomputed here.
        """
        gl_x, gl_w = roots_legendre(_GL_ORDER)
        edges = np.arange(0.0, _U_MAX + panel, panel)
        mid = 0.5 * (edges[:-1] + edges[1:])
        half = 0.5 * panel
        u = (mid[:, None] + half * gl_x[None, :]).ravel()
        w = np.broadcast_to(half * gl_w, (mid.size, _GL_ORDER)).ravel().copy()
        g = np.empty_like(u)
        env = np.empty_like(u)
        lam = self.weights
        step = 20_000
        for lo in range(0, u.size, step):
            hi = min(lo + step, u.size)
            lam_u = lam[None, :] * u[lo:hi, None]
            g[lo:hi] = 0.5 * np.arctan(lam_u).sum(axis=1)
            env[lo:hi] = np.exp(-0.25 * np.log1p(lam_u * lam_u).sum(axis=1)) / u[lo:hi]
        return u, w * env, g

    def _ensure_nodes(self):
        if self._nodes is None:
            u, we, g = self._build_nodes(_PANEL)
            # self-check: halving the panel width must not move the CDF
            u2, we2, g2 = self._build_nodes(_PANEL / 2.0)
            for x in (0.05, 0.3, 1.0, 5.0, 20.0):
                a = 0.5 - float(np.sum(we * np.sin(g - 0.5 * x * u))) / math.pi
                b = 0.5 - float(np.sum(we2 * np.sin(g2 - 0.5 * x * u2))) / math.pi
                if abs(a - b) > 1e-8:
                    raise RuntimeError(
                        f"characteristic-function inversion did not converge at x={x}: "
                        f"{a!r} vs {b!r} under panel refinement"
                    )
            self._nodes = (u, we, g)
        return self._nodes

    def cdf(self, x: float) -> float:
        """P(Q <= x); 0 for x <= 0.  Raises on quadrature failure."""
        x0 = float(x) - self.tail_shift
        if x0 <= 0.0:
            return 0.0
        if x0 >= _X_SATURATED:
            return 1.0
        u, we, g = self._ensure_nodes()
        val = float(np.sum(we * np.sin(g - 0.5 * x0 * u)))
        return float(min(max(0.5 - val / math.pi, 0.0), 1.0))

    # -- quantiles --------------------------------------------------------

    def _ensure_grid(self):
        if self._cdf_grid is None:
            xs = np.concatenate([np.linspace(1e-4, 2.0, 1500, endpoint=False),
                                 np.linspace(2.0, 8.0, 900, endpoint=False),
                                 np.geomspace(8.0, 60.0, 300)])
            ps = np.array([self.cdf(x) for x in xs])
            keep = np.concatenate([[True], np.diff(ps) > 0])
            self._cdf_grid = (xs[keep], ps[keep])
        return self._cdf_grid

    def quantile(self, q: float) -> float:
        """Inverse CDF by bisection to 1e-8."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"q must be in (0, 1), got {q}")
        xs, ps = self._ensure_grid()
        i = int(np.searchsorted(ps, q))
        lo = xs[i - 1] if i > 0 else 0.0
        hi = xs[i] if i < xs.size else xs[-1]
        while self.cdf(hi) < q:
            lo, hi = hi, hi * 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if hi - lo < 1e-8:
                break
            if self.cdf(mid) < q:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def quantile_table(self, spacing: float = 1e-4) -> np.ndarray:
        """(prob, value) rows on a regular prob grid, by monotone inversion."""
        xs, ps = self._ensure_grid()
        probs = np.arange(spacing, 1.0 - 0.5 * spacing, spacing)
        vals = np.interp(probs, ps, xs)
        return np.column_stack([probs, vals])

    def save_table(self, path, spacing: float = 1e-4) -> None:
        table = self.quantile_table(spacing)
        header = _TABLE_HEADER.format(K=self.eigen_count)
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for prob, val in table:
                fh.write(f"{prob:.6f} {val:.10f}\n")


_DEFAULT_LAW: CvmBmLaw | None = None


def default_law() -> CvmBmLaw:
    """Process-wide shared law instance (thread-safe after construction)."""
    global _DEFAULT_LAW
    if _DEFAULT_LAW is None:
        _DEFAULT_LAW = CvmBmLaw()
    return _DEFAULT_LAW


def cvm_bm_cdf(x: float) -> float:
    return default_law().cdf(x)


def cvm_bm_quantile(q: float) -> float:
    return default_law().quantile(q)


def cauchy_combine(pvals, weights=None) -> tuple[float, float]:
    """Cauchy combination: T = sum_i w_i tan((1/2 - p_i) pi).

    Weights must be nonnegative and sum to 1 (within 1e-12); equal
    weights by default.  Inputs are clipped into [1e-15, 1 - 1e-15].
    Returns (statistic, combined_p) with combined_p the standard Cauchy
    upper tail at the statistic.
    """
    pvals = np.asarray(pvals, dtype=float).ravel()
    if pvals.size == 0:
        raise ValueError("no p-values to combine")
    if weights is None:
        weights = np.full(pvals.size, 1.0 / pvals.size)
    else:
        weights = np.asarray(weights, dtype=float).ravel()
    if weights.shape != pvals.shape:
        raise ValueError("weights must match pvals in length")
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
    p = np.clip(pvals, PCLIP, 1.0 - PCLIP)
    stat = float(np.sum(weights * np.tan((0.5 - p) * math.pi)))
    return stat, float(cauchy_sf(stat))
