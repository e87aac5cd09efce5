"""Synthetic data generators and the Monte Carlo size/power harness.

Study 1 (gaussian linear null, n=300 in the reference experiments):

    H11: Y = b0'X + 0.1 a (b0'X)^2 + e
    H12: Y = b0'X + a cos(0.6 pi b0'X) + e
    H13: Y = b0'X + a exp(0.25 b1'X) + e

with b0 = (1,1,1,1,1,0,...), b1 = ten ones, X ~ N(0, Sigma) for
Sigma = I or AR(1) with rho in {0.4, 0.8}, and standard gaussian e.
a = 0 is the null; H11/H13 are low-frequency alternatives, H12 is
high-frequency.

Study 2 (logistic null, n=600): Y | X ~ Bernoulli(mu(b0'X + a g(X)))
with g = 0.2 (b0'X)^2 (H21) or the lag-interaction sum
X1X2 + X2X3 + X3X4 + X4X5 (H22).

`mc_experiment` replays a scenario `reps` times with per-replication
seed streams derived from (seed, rep); replications are independent
and individually reproducible.  Worker count honors UHDGOF_THREADS.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .families import binomial, gaussian
from .runner import Config, run_test

__all__ = ["Scenario", "ExperimentResult", "gen_study1", "gen_study2",
           "mc_experiment", "write_results_csv", "CSV_HEADER"]

STUDY1_MODELS = ("H11", "H12", "H13")
STUDY2_MODELS = ("H21", "H22")

CSV_HEADER = "model,rho,n,p,a,method,reps,rate,se"


@dataclass(frozen=True)
class Scenario:
    study: int
    model: str
    a: float
    n: int
    p: int
    rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.study == 1 and self.model not in STUDY1_MODELS:
            raise ValueError(f"study 1 models are {STUDY1_MODELS}")
        if self.study == 2 and self.model not in STUDY2_MODELS:
            raise ValueError(f"study 2 models are {STUDY2_MODELS}")
        if self.study not in (1, 2):
            raise ValueError("study must be 1 or 2")

    @property
    def family(self):
        return gaussian() if self.study == 1 else binomial()


def _draw_covariates(rng, n: int, p: int, rho: float) -> np.ndarray:
    """N(0, Sigma) draws; AR(1) columns by the O(np) scalar recursion."""
    Z = rng.standard_normal((n, p))
    if rho == 0.0:
        return Z
    X = np.empty_like(Z)
    X[:, 0] = Z[:, 0]
    c = np.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        X[:, j] = rho * X[:, j - 1] + c * Z[:, j]
    return X


def _signal(model: str, X: np.ndarray, a: float) -> np.ndarray:
    index = X[:, :5].sum(axis=1)  # b0'X with five unit coefficients
    if model == "H11":
        return index + 0.1 * a * index ** 2
    if model == "H12":
        return index + a * np.cos(0.6 * np.pi * index)
    if model == "H13":
        index1 = X[:, :10].sum(axis=1)
        return index + a * np.exp(0.25 * index1)
    if model == "H21":
        return index + a * 0.2 * index ** 2
    if model == "H22":
        inter = (X[:, 0] * X[:, 1] + X[:, 1] * X[:, 2]
                 + X[:, 2] * X[:, 3] + X[:, 3] * X[:, 4])
        return index + a * inter
    raise ValueError(f"unknown model {model!r}")


def _columns(p: int) -> list[str]:
    return [f"x{j + 1}" for j in range(p)]


def gen_study1(s: Scenario) -> Dataset:
    """Gaussian data for H11-H13; requires p >= 10 (H13 uses ten signals)."""
    if s.study != 1:
        raise ValueError("gen_study1 needs a study-1 scenario")
    if s.p < 10:
        raise ValueError("study 1 needs p >= 10")
    rng = np.random.default_rng(np.random.SeedSequence((s.seed, 0xD1)))
    X = _draw_covariates(rng, s.n, s.p, s.rho)
    y = _signal(s.model, X, s.a) + rng.standard_normal(s.n)
    return Dataset(X=X, y=y, columns=_columns(s.p), family=gaussian())


def gen_study2(s: Scenario) -> Dataset:
    """Bernoulli data for H21-H22 under the logistic inverse link."""
    if s.study != 2:
        raise ValueError("gen_study2 needs a study-2 scenario")
    if s.p < 5:
        raise ValueError("study 2 needs p >= 5")
    rng = np.random.default_rng(np.random.SeedSequence((s.seed, 0xD2)))
    X = _draw_covariates(rng, s.n, s.p, s.rho)
    eta = _signal(s.model, X, s.a)
    prob = 1.0 / (1.0 + np.exp(-np.clip(eta, -500, 500)))
    y = (rng.random(s.n) < prob).astype(float)
    return Dataset(X=X, y=y, columns=_columns(s.p), family=binomial())


def generate(s: Scenario) -> Dataset:
    return gen_study1(s) if s.study == 1 else gen_study2(s)


@dataclass
class ExperimentResult:
    rejection_rate: float
    mc_se: float
    records: list[dict] = field(default_factory=list)
    n_excluded: int = 0

    @property
    def n_used(self) -> int:
        return len(self.records) - self.n_excluded


def replication_seeds(seed: int, rep: int) -> tuple[int, int]:
    """(data seed, config seed) for one replication; stable given (seed, rep)."""
    states = np.random.SeedSequence((int(seed), int(rep))).generate_state(2)
    return int(states[0]), int(states[1])


def run_replication(scenario: Scenario, method: str, level: float,
                    seed: int, rep: int) -> dict:
    data_seed, cfg_seed = replication_seeds(seed, rep)
    data = generate(Scenario(scenario.study, scenario.model, scenario.a,
                             scenario.n, scenario.p, scenario.rho, seed=data_seed))
    cfg = Config(method=method, family=scenario.family, seed=cfg_seed, level=level)
    try:
        report = run_test(data, cfg)
    except Exception as exc:  # recorded and excluded by the caller
        return {"rep": rep, "error": f"{type(exc).__name__}: {exc}"}
    return {"rep": rep, "pvalue": report.pvalue, "statistic": report.statistic,
            "reject": bool(report.pvalue <= level)}


def _worker_count() -> int:
    env = os.environ.get("UHDGOF_THREADS")
    if env:
        return max(1, int(env))
    return 1


def mc_experiment(scenario: Scenario, method: str, reps: int, level: float = 0.05,
                  seed: int = 0, checkpoint_path=None, workers: int | None = None,
                  max_exclusion_rate: float = 0.05) -> ExperimentResult:
    """Empirical rejection rate of `method` over `reps` replications.

    Each replication draws data and runs the full pipeline with its own
    derived seed stream, so results are independent of worker count and
    any single replication can be reproduced bit-identically from
    (seed, rep).  Failed replications are recorded and excluded; more
    than `max_exclusion_rate` of them fails the experiment.  Partial
    records are checkpointed every 25 replications when a path is given.
    """
    if reps < 50:
        raise ValueError("need reps >= 50")
    if workers is None:
        workers = _worker_count()

    records: list[dict] = [None] * reps
    def flush(upto):
        if checkpoint_path is not None and (upto % 25 == 0 or upto == reps):
            done = [r for r in records[:upto] if r is not None]
            _write_checkpoint(checkpoint_path, done)

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_replication, scenario, method, level, seed, rep)
                       for rep in range(reps)]
            for rep, fut in enumerate(futures):  # ordered reduction
                records[rep] = fut.result()
                flush(rep + 1)
    else:
        for rep in range(reps):
            records[rep] = run_replication(scenario, method, level, seed, rep)
            flush(rep + 1)

    errors = [r for r in records if "error" in r]
    if len(errors) > max_exclusion_rate * reps:
        raise RuntimeError(
            f"{len(errors)}/{reps} replications failed "
            f"(first: {errors[0]['error']})"
        )
    ok = [r for r in records if "error" not in r]
    rate = float(np.mean([r["reject"] for r in ok]))
    se = float(np.sqrt(rate * (1.0 - rate) / len(ok)))
    return ExperimentResult(rejection_rate=rate, mc_se=se, records=records,
                            n_excluded=len(errors))


def _write_checkpoint(path, done: list[dict]) -> None:
    with open(path, "w") as fh:
        fh.write("rep,pvalue,statistic,reject,error\n")
        for r in done:
            if "error" in r:
                fh.write(f"{r['rep']},,,,{r['error']!r}\n")
            else:
                fh.write(f"{r['rep']},{r['pvalue']:.17g},{r['statistic']:.17g},"
                         f"{int(r['reject'])},\n")


def write_results_csv(path, rows: list[dict]) -> None:
    """One row per experiment cell, the reference tables flattened."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(f"{r['model']},{r['rho']:g},{r['n']},{r['p']},{r['a']:g},"
                     f"{r['method']},{r['reps']},{r['rate']:.6f},{r['se']:.6f}\n")
