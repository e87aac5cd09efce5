"""Assembly of the published tests over split data and estimated projections.

Three methods share one skeleton:

* tcvm_c: estimate projection directions on D1, evaluate the projected
  CvM statistics on D2 (with its own refit), Cauchy-combine.
* tcvm_cf: run both split directions and combine everything.
* hybrid_cf: tcvm_cf plus the local-smoothing p-values for the SIR
  directions (index 0 excluded) in both split directions.

Every p-value enters the combination with equal weight; dropped
(untransformable) projections are recorded and the remaining weights
renormalized.  The statistic fit on each half (coefficients, residuals,
truncation, nuisance curves) uses a model refit on that same half: the
other half contributes only the projection directions.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import Dataset
from .families import Family, resolve_family
from .lasso import FittedModel, fit_cv_post_lasso
from .nulldist import cauchy_combine, default_law
from .pls import pls_bandwidth, pls_pvalue, pls_statistic
from .process import project
from .projections import (ProjectionSet, build_projection_set, dc_sis_screen,
                          screen_size, sparse_sir, split_data)
from .transform import UntransformableProjectionError, default_mode, projected_tcvm_test
from .lasso import residuals as model_residuals

__all__ = ["Config", "TestReport", "ProjectionRecord", "run_test",
           "run_tcvm_c", "run_tcvm_cf", "run_hybrid_cf", "estimate_projections"]

METHODS = ("tcvm_c", "tcvm_cf", "hybrid_cf")


@dataclass(frozen=True)
class Config:
    """Knobs for one test run; `seed` governs the split and every CV."""

    method: str
    family: Family
    seed: int = 0
    folds: int = 10
    sir_slices: int | None = None  # default: 10 continuous, 2 binary
    max_d: int = 5
    level: float = 0.05
    mode: str | None = None  # override homoscedastic/general dispatch

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        object.__setattr__(self, "family", resolve_family(self.family))


@dataclass(frozen=True)
class ProjectionRecord:
    """One combined term: which half was evaluated, which direction, what kind."""

    half: str            # half the statistic was computed on
    direction_index: int
    kind: str            # "tcvm" | "pls"
    statistic: float
    pvalue: float
    degenerate: bool = False


@dataclass
class TestReport:
    statistic: float
    pvalue: float
    method: str
    per_projection: list[ProjectionRecord]
    d_hat_1: int
    d_hat_2: int
    dropped_projections: list
    seed: int
    split_checksum: str
    level: float
    reject: bool
    weights: list[float]
    notes: list[str] = field(default_factory=list)

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(asdict(self), indent=indent)


def _derived_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence((int(seed),) + tuple(int(t) for t in tags))
               .generate_state(1)[0])


def estimate_projections(X, y, cfg: Config, half_label: str, seed: int) -> ProjectionSet:
    """Fit + screen + SIR on one half; directions only, nothing leaks out."""
    family = cfg.family
    model = fit_cv_post_lasso(X, y, family, folds=cfg.folds, seed=_derived_seed(seed, 1))
    k = min(screen_size(X.shape[0]), X.shape[1])
    screened = dc_sis_screen(X, y, k)
    slices = cfg.sir_slices if cfg.sir_slices is not None else (2 if family.is_binary else 10)
    sir_dirs = sparse_sir(X[:, screened], y, screened, X.shape[1],
                          n_slices=slices, max_d=cfg.max_d,
                          seed=_derived_seed(seed, 2), binary=family.is_binary,
                          folds=cfg.folds)
    return build_projection_set(model, sir_dirs, half_label,
                                fallback_index=int(screened[0]))


def _statistics_on_half(X, y, cfg: Config, directions: ProjectionSet,
                        eval_half: str, seed: int, with_pls: bool, law):
    """Projected test statistics (and PLS terms) for one evaluation half."""
    family = cfg.family
    model = fit_cv_post_lasso(X, y, family, folds=cfg.folds, seed=_derived_seed(seed, 3))
    mode = cfg.mode if cfg.mode is not None else default_mode(family)
    records: list[ProjectionRecord] = []
    dropped: list = []
    for idx in range(directions.directions.shape[0]):
        alpha = directions.directions[idx]
        pid = f"{eval_half}:{idx}"
        try:
            res = projected_tcvm_test(X, y, model, alpha, mode,
                                      projection_id=pid, law=law)
        except UntransformableProjectionError:
            dropped.append(pid)
            continue
        records.append(ProjectionRecord(eval_half, idx, "tcvm",
                                        res.statistic, res.pvalue, res.degenerate))
    if with_pls and directions.sir_directions is not None:
        # local-smoothing terms range over the SIR directions (the fit
        # direction at index 0 is excluded from these sums)
        eps = model_residuals(model, X, y)
        for idx in range(directions.sir_directions.shape[0]):
            z = project(X, directions.sir_directions[idx])
            h = pls_bandwidth(z)
            if h <= 0:
                dropped.append(f"{eval_half}:{idx + 1}:pls")
                continue
            stat, degenerate = pls_statistic(z, eps, h)
            records.append(ProjectionRecord(eval_half, idx + 1, "pls",
                                            stat, pls_pvalue(stat), degenerate))
    return records, dropped


def _combine(records: list[ProjectionRecord], dropped, cfg: Config,
             d1: int, d2: int, plan_checksum: str, notes: list[str]) -> TestReport:
    if not records:
        raise RuntimeError("no usable projection")
    pvals = np.array([r.pvalue for r in records])
    weights = np.full(pvals.size, 1.0 / pvals.size)
    stat, pvalue = cauchy_combine(pvals, weights)
    return TestReport(
        statistic=stat,
        pvalue=pvalue,
        method=cfg.method,
        per_projection=records,
        d_hat_1=d1,
        d_hat_2=d2,
        dropped_projections=list(dropped),
        seed=cfg.seed,
        split_checksum=plan_checksum,
        level=cfg.level,
        reject=bool(pvalue <= cfg.level),
        weights=list(weights),
        notes=notes,
    )


def _split_dataset(data: Dataset, seed: int):
    plan = split_data(data.n, seed)
    checksum = hashlib.sha256(plan.indices_d1.astype(np.int64).tobytes()).hexdigest()[:16]
    X, y = data.X, data.y
    return ((X[plan.indices_d1], y[plan.indices_d1]),
            (X[plan.indices_d2], y[plan.indices_d2]), checksum)


_DIRECTION_ERRORS = (RuntimeError, ValueError, np.linalg.LinAlgError)


def _run(data: Dataset, cfg: Config, with_pls: bool, both_directions: bool) -> TestReport:
    if data.n < 40:
        raise ValueError("need n >= 40 (each half must support kernel estimation)")
    law = default_law()
    (x1, y1), (x2, y2), checksum = _split_dataset(data, cfg.seed)

    plan = [("D1", (x1, y1), "D2", (x2, y2), 11, 12)]
    if both_directions:
        plan.append(("D2", (x2, y2), "D1", (x1, y1), 21, 22))

    records: list[ProjectionRecord] = []
    dropped: list = []
    notes: list[str] = []
    d_hats = {"D1": 0, "D2": 0}
    for proj_label, (xp, yp), eval_label, (xe, ye), tag_p, tag_e in plan:
        try:
            proj = estimate_projections(xp, yp, cfg, proj_label,
                                        _derived_seed(cfg.seed, tag_p))
            if not proj.includes_theta0:
                notes.append(f"{proj_label}: fitted coefficients were zero; "
                             "index 0 is not the fit direction")
            if proj.used_fallback:
                notes.append(f"{proj_label}: projection fallback to top screened coordinate")
            rec, drop = _statistics_on_half(xe, ye, cfg, proj, eval_label,
                                            _derived_seed(cfg.seed, tag_e), with_pls, law)
            dropped += drop
            if not rec:
                raise RuntimeError(f"all projections from {proj_label} were dropped")
        except _DIRECTION_ERRORS as exc:
            if not both_directions:
                raise RuntimeError(f"no usable projection: {exc}") from exc
            notes.append(f"direction {proj_label}->{eval_label} failed, "
                         f"falling back to the surviving direction: {exc}")
            continue
        records += rec
        d_hats[proj_label] = proj.d_hat

    return _combine(records, dropped, cfg, d_hats["D1"], d_hats["D2"], checksum, notes)


def run_tcvm_c(data: Dataset, cfg: Config) -> TestReport:
    """Single-direction test: D1 projections, D2 statistics."""
    return _run(data, cfg, with_pls=False, both_directions=False)


def run_tcvm_cf(data: Dataset, cfg: Config) -> TestReport:
    """Cross-fitting test: both split directions combined."""
    return _run(data, cfg, with_pls=False, both_directions=True)


def run_hybrid_cf(data: Dataset, cfg: Config) -> TestReport:
    """Cross-fitting hybrid: CvM terms plus local-smoothing terms."""
    return _run(data, cfg, with_pls=True, both_directions=True)


def run_test(data: Dataset, cfg: Config) -> TestReport:
    runner = {"tcvm_c": run_tcvm_c, "tcvm_cf": run_tcvm_cf, "hybrid_cf": run_hybrid_cf}
    return runner[cfg.method](data, cfg)
