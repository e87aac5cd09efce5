"""GLM families: inverse links, their derivatives, and deviances.

Only the two families the test suite targets are provided: Gaussian
linear models (identity link) and binomial logistic regression.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = ["Family", "gaussian", "binomial", "resolve_family"]

# Probabilities are clipped away from {0, 1} before log-likelihoods.
_MU_EPS = 1e-10


@dataclass(frozen=True)
class Family:
    """A one-parameter GLM family defined by its inverse link.

    `mu` is the inverse link (identity for gaussian, logistic sigmoid
    for binomial) and `mu_prime` its exact analytic derivative.
    """

    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "binomial"):
            raise ValueError(f"unknown family kind: {self.kind!r}")

    @property
    def is_binary(self) -> bool:
        return self.kind == "binomial"

    def mu(self, z):
        """Inverse link evaluated at the linear predictor."""
        z = np.asarray(z, dtype=float)
        if self.kind == "gaussian":
            return z
        return expit(z)

    def mu_prime(self, z):
        """Derivative of the inverse link."""
        z = np.asarray(z, dtype=float)
        if self.kind == "gaussian":
            return np.ones_like(z)
        m = expit(z)
        return m * (1.0 - m)

    def deviance(self, y, mu) -> float:
        """Deviance of predictions `mu` against responses `y`.

        Gaussian: residual sum of squares.  Binomial: -2 log-likelihood
        with probabilities clipped away from {0, 1}.
        """
        y = np.asarray(y, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if self.kind == "gaussian":
            return float(np.sum((y - mu) ** 2))
        m = np.clip(mu, _MU_EPS, 1.0 - _MU_EPS)
        return float(-2.0 * np.sum(y * np.log(m) + (1.0 - y) * np.log(1.0 - m)))

    def validate_response(self, y) -> None:
        y = np.asarray(y)
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")
        if self.kind == "binomial":
            values = np.unique(y)
            if not np.all(np.isin(values, (0.0, 1.0))):
                raise ValueError(
                    f"binomial response must lie in {{0, 1}}; saw values {values[:10]}"
                )


def gaussian() -> Family:
    return Family("gaussian")


def binomial() -> Family:
    return Family("binomial")


def resolve_family(name) -> Family:
    """Accept a Family instance or a family-kind string."""
    if isinstance(name, Family):
        return name
    return Family(str(name))
