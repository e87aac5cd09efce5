"""Goodness-of-fit tests for sparse (generalized) linear models with p >> n.

The package tests whether E[Y | X] follows a sparse GLM form when the
covariate dimension may far exceed the sample size.  The engine is a
projected residual-marked empirical process whose estimation drift is
removed by an innovation (martingale-style) transform, making the
resulting Cramer-von Mises statistic asymptotically distribution-free;
p-values from data-driven projections are aggregated by the Cauchy
combination, optionally mixed with a local-smoothing statistic that
targets high-frequency departures.
"""

__version__ = "0.1.0"

from .data import Dataset, load_csv, quadratic_expand, standardize, write_csv
from .families import Family, binomial, gaussian
from .lasso import (FittedModel, cv_select_lambda, fit_cv_post_lasso,
                    fit_lasso_path, fit_post_lasso, lambda_grid, residuals)
from .nulldist import (CvmBmLaw, cauchy_combine, cauchy_sf, cvm_bm_cdf,
                       cvm_bm_quantile, normal_cdf)
from .pls import pls_bandwidth, pls_pvalue, pls_statistic
from .process import ProcessTable, marked_process, project, t0_quantile
from .projections import (ProjectionSet, SplitPlan, build_projection_set,
                          dc_sis_screen, distance_correlation, sparse_sir,
                          split_data)
from .runner import (Config, TestReport, run_hybrid_cf, run_tcvm_c,
                     run_tcvm_cf, run_test)
from .simulate import Scenario, gen_study1, gen_study2, mc_experiment
from .smoothing import (NuisanceCurves, cv_bandwidth, epanechnikov,
                        estimate_nuisance_curves, nw_estimate)
from .transform import (ProjectedTestResult, TransformState,
                        UntransformableProjectionError, compute_A,
                        compute_gamma_and_H, projected_tcvm_test,
                        tcvm_statistic, transform_process)

__all__ = [
    "__version__",
    "Dataset", "load_csv", "write_csv", "standardize", "quadratic_expand",
    "Family", "gaussian", "binomial",
    "FittedModel", "lambda_grid", "fit_lasso_path", "cv_select_lambda",
    "fit_post_lasso", "fit_cv_post_lasso", "residuals",
    "CvmBmLaw", "cvm_bm_cdf", "cvm_bm_quantile", "cauchy_combine",
    "normal_cdf", "cauchy_sf",
    "pls_statistic", "pls_pvalue", "pls_bandwidth",
    "ProcessTable", "project", "marked_process", "t0_quantile",
    "SplitPlan", "ProjectionSet", "split_data", "distance_correlation",
    "dc_sis_screen", "sparse_sir", "build_projection_set",
    "Config", "TestReport", "run_test", "run_tcvm_c", "run_tcvm_cf", "run_hybrid_cf",
    "Scenario", "gen_study1", "gen_study2", "mc_experiment",
    "NuisanceCurves", "epanechnikov", "nw_estimate", "cv_bandwidth",
    "estimate_nuisance_curves",
    "TransformState", "ProjectedTestResult", "UntransformableProjectionError",
    "compute_A", "compute_gamma_and_H", "transform_process", "tcvm_statistic",
    "projected_tcvm_test",
]
