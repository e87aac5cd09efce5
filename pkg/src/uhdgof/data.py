"""Dataset container, CSV ingestion, standardization, quadratic expansion."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .families import Family, resolve_family

__all__ = ["Dataset", "load_csv", "write_csv", "standardize", "quadratic_expand"]

# quadratic_expand refuses to build more than this many total columns
EXPANSION_CAP = 200_000


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix + response + family metadata; the universal input.

    `standardization` records what `standardize` did (per-column means
    and scales, dropped constant columns); None until standardized.
    """

    X: np.ndarray
    y: np.ndarray
    columns: list[str]
    family: Family
    response_name: str = "y"
    standardization: dict | None = None
    n_dropped_rows: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float).ravel()
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if X.ndim != 2:
            raise ValueError("X must be 2-d")
        if X.shape[0] != y.shape[0]:
            raise ValueError("X and y row counts differ")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 rows")
        if len(self.columns) != X.shape[1]:
            raise ValueError("column names do not match X")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise ValueError("non-finite entries in the dataset")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def load_csv(path, response_column: str, family) -> Dataset:
    """Read a headered CSV into a Dataset.

    Rows with missing values are dropped (counted on the result);
    unparseable cells raise with their row/column location.  Binomial
    responses must be coded 0/1.
    """
    family = resolve_family(family)
    df = pd.read_csv(path)
    if response_column not in df.columns:
        raise ValueError(f"response column {response_column!r} not in {list(df.columns)[:20]}")
    for col in df.columns:
        if df[col].dtype == object:
            coerced = pd.to_numeric(df[col], errors="coerce")
            bad = coerced.isna() & df[col].notna()
            if bad.any():
                row = int(np.flatnonzero(bad.to_numpy())[0])
                raise ValueError(
                    f"unparseable cell at row {row}, column {col!r}: {df[col].iloc[row]!r}"
                )
            df[col] = coerced
    n_before = len(df)
    df = df.dropna(axis=0)
    n_dropped = n_before - len(df)
    if len(df) == 0:
        raise ValueError("zero usable rows after dropping missing values")
    y = df[response_column].to_numpy(dtype=float)
    feature_cols = [c for c in df.columns if c != response_column]
    X = df[feature_cols].to_numpy(dtype=float)
    family.validate_response(y)
    return Dataset(X=X, y=y, columns=list(feature_cols), family=family,
                   response_name=response_column, n_dropped_rows=n_dropped)


def write_csv(data: Dataset, path) -> None:
    """Write the dataset back out; 17 significant digits round-trip doubles."""
    df = pd.DataFrame(data.X, columns=data.columns)
    df.insert(0, data.response_name, data.y)
    df.to_csv(path, index=False, float_format="%.17g")


def standardize(data: Dataset) -> Dataset:
    """Center/scale columns to mean 0, sample variance 1; drop constants.

    A gaussian response is centered (not scaled); a binomial response is
    left untouched.  Idempotent up to floating-point noise.
    """
    X = data.X
    means = X.mean(axis=0)
    scales = X.std(axis=0, ddof=1)
    keep = scales > 1e-12
    if not np.any(keep):
        raise ValueError("all columns are constant")
    dropped_cols = [data.columns[j] for j in np.flatnonzero(~keep)]
    Xs = (X[:, keep] - means[keep]) / scales[keep]
    y = data.y
    y_center = 0.0
    if data.family.kind == "gaussian":
        y_center = float(y.mean())
        y = y - y_center
    record = {
        "means": means[keep],
        "scales": scales[keep],
        "dropped_columns": dropped_cols,
        "y_center": y_center,
    }
    return Dataset(X=Xs, y=y,
                   columns=[c for c, k in zip(data.columns, keep) if k],
                   family=data.family, response_name=data.response_name,
                   standardization=record, n_dropped_rows=data.n_dropped_rows)


def quadratic_expand(data: Dataset, cap: int = EXPANSION_CAP) -> Dataset:
    """Append all pairwise products X_i * X_j (i <= j), then standardize them.

    Adds p(p+1)/2 columns named "xi*xj".  Raises if the expanded column
    count p(p+3)/2 would exceed `cap`.
    """
    p = data.p
    total = p + p * (p + 1) // 2
    if total > cap:
        raise ValueError(f"expansion would create {total} columns, over the cap {cap}")
    X = data.X
    cols = []
    names = []
    for i in range(p):
        block = X[:, i:] * X[:, [i]]
        cols.append(block)
        names.extend(f"{data.columns[i]}*{data.columns[j]}" for j in range(i, p))
    Q = np.concatenate(cols, axis=1)
    means = Q.mean(axis=0)
    scales = Q.std(axis=0, ddof=1)
    keep = scales > 1e-12
    Q = (Q[:, keep] - means[keep]) / scales[keep]
    names = [nm for nm, k in zip(names, keep) if k]
    return Dataset(X=np.concatenate([X, Q], axis=1), y=data.y,
                   columns=list(data.columns) + names, family=data.family,
                   response_name=data.response_name,
                   standardization=data.standardization,
                   n_dropped_rows=data.n_dropped_rows)
