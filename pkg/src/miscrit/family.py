"""Exponential-family working models: linear, logistic and Poisson.

Each family is described by its cumulant function ``b`` together with the
first two derivatives, evaluated componentwise on the natural parameter
``theta = X @ beta``.  ``b'`` gives the mean vector and ``b''`` the diagonal
of the model covariance.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import NonFiniteLinkError

# exp(x) overflows float64 just above this
_EXP_LIMIT = 709.0


class Kind(str, enum.Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"
    POISSON = "poisson"


@dataclass(frozen=True)
class Family:
    """A working GLM family.

    ``dispersion`` is the sigma^2 of the linear model.  ``None`` means it is
    estimated from the residual sum of squares at fit time.  Logistic and
    Poisson always carry a fixed dispersion of 1.
    """

    kind: Kind
    dispersion: float | None = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is not Kind.LINEAR and self.dispersion != 1.0:
            raise ValueError(f"{self.kind.value} family has no estimable dispersion")
        if self.dispersion is not None and not (
            np.isfinite(self.dispersion) and self.dispersion > 0
        ):
            raise ValueError(f"dispersion must be positive and finite, got {self.dispersion}")

    @classmethod
    def linear(cls, sigma2: float | None = None) -> Family:
        return cls(Kind.LINEAR, sigma2)

    @classmethod
    def logistic(cls) -> Family:
        return cls(Kind.LOGISTIC, 1.0)

    @classmethod
    def poisson(cls) -> Family:
        return cls(Kind.POISSON, 1.0)

    @classmethod
    def from_name(cls, name: str) -> Family:
        kind = Kind(name.lower())
        if kind is Kind.LINEAR:
            return cls.linear()
        return cls(kind, 1.0)

    @property
    def estimates_dispersion(self) -> bool:
        return self.dispersion is None

    def with_dispersion(self, sigma2: float) -> Family:
        """Return a copy with the dispersion resolved to ``sigma2``."""
        if self.kind is not Kind.LINEAR:
            return self
        return replace(self, dispersion=float(sigma2))

    def _sigma2(self) -> float:
        if self.dispersion is None:
            raise ValueError("linear dispersion not resolved; fit the model first")
        return self.dispersion


class LinkValues(NamedTuple):
    theta: np.ndarray
    mu: np.ndarray
    sigma_diag: np.ndarray


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise NonFiniteLinkError("natural parameter contains NaN or Inf")
    return theta


def _check_poisson(theta: np.ndarray) -> None:
    if theta.size and theta.max() > _EXP_LIMIT:
        raise NonFiniteLinkError(
            f"Poisson link overflow: theta = {theta.max():.6g} exceeds {_EXP_LIMIT}"
        )


def evaluate_link(family: Family, theta) -> LinkValues:
    """Mean ``b'(theta)`` and variance ``b''(theta)`` componentwise."""
    theta = _check_theta(theta)
    if family.kind is Kind.LINEAR:
        s2 = family._sigma2()
        mu = s2 * theta
        var = np.full_like(theta, s2)
    elif family.kind is Kind.LOGISTIC:
        # symmetric form: only exp(-|theta|) is ever evaluated
        e = np.exp(-np.abs(theta))
        denom = 1.0 + e
        mu = np.where(theta >= 0, 1.0 / denom, e / denom)
        var = e / (denom * denom)
    else:
        _check_poisson(theta)
        mu = np.exp(theta)
        var = mu.copy()
    return LinkValues(theta, mu, var)


def b_values(family: Family, theta) -> np.ndarray:
    """Cumulant function ``b`` applied componentwise."""
    theta = _check_theta(theta)
    if family.kind is Kind.LINEAR:
        return 0.5 * family._sigma2() * theta * theta
    if family.kind is Kind.LOGISTIC:
        return np.maximum(theta, 0.0) + np.log1p(np.exp(-np.abs(theta)))
    _check_poisson(theta)
    return np.exp(theta)


def b_sum(family: Family, theta) -> float:
    total = float(np.sum(b_values(family, theta)))
    if not np.isfinite(total):
        raise NonFiniteLinkError("sum of b(theta) is not finite")
    return total
