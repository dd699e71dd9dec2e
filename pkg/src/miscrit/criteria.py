"""Information criteria for comparing fitted working models.

All criteria are on the ``-2 * loglik`` scale, so smaller is better.  GAIC,
GBIC and SIC take the misspecification contrast from a :class:`SandwichPair`.
A singular ``B_hat`` makes the log-determinant undefined; every criterion that
uses it then scores ``+inf`` so that the candidate is never selected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DecompositionUndefinedError
from .sandwich import SandwichPair

DEFAULT_GAMMAS = (0.0, 0.25, 0.5, 0.75, 1.0)


def _check_dim(dim):
    if dim < 1:
        raise ValueError(f"model dimension must be >= 1, got {dim}")


def _check_n(n):
    if n < 2:
        raise ValueError(f"sample size must be >= 2, got {n}")


def gamma_weights(gamma: float) -> tuple[float, float]:
    """Return ``(gamma_star, gamma_star2)`` = ``(max(g, 1-g), max(2-3g, 1-g))``."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    return max(gamma, 1.0 - gamma), max(2.0 - 3.0 * gamma, 1.0 - gamma)


def aic(loglik: float, dim: int) -> float:
    _check_dim(dim)
    return -2.0 * loglik + 2.0 * dim


def bic(loglik: float, dim: int, n: float) -> float:
    _check_dim(dim)
    _check_n(n)
    return -2.0 * loglik + math.log(n) * dim


def gaic(loglik: float, sw: SandwichPair) -> float:
    return -2.0 * loglik + 2.0 * sw.trace_H


def gbic(loglik: float, sw: SandwichPair, dim: int, n: float) -> float:
    _check_dim(dim)
    _check_n(n)
    if not sw.B_rank_ok:
        return math.inf
    return -2.0 * loglik + math.log(n) * dim - sw.logdet_H


def sic(loglik: float, sw: SandwichPair, dim: int, n: float, gamma: float = 0.5) -> float:
    """Semi-Bayesian information criterion with index ``gamma``.

    ``gamma = 0`` reproduces GAIC and ``gamma = 1`` reproduces GBIC.
    """
    g1, g2 = gamma_weights(gamma)
    _check_dim(dim)
    _check_n(n)
    value = -2.0 * g1 * loglik + g2 * sw.trace_H
    if gamma > 0:
        if not sw.B_rank_ok:
            return math.inf
        value += gamma * math.log(n) * dim - gamma * sw.logdet_H
    return value


@dataclass(frozen=True)
class SicDecomposition:
    neg_loglik: float
    complexity: float
    misspec_kl: float

    @property
    def total(self) -> float:
        return self.neg_loglik + self.complexity + self.misspec_kl


def sic_half_decomposition(loglik: float, sw: SandwichPair, dim: int, n: float) -> SicDecomposition:
    """Split SIC at ``gamma = 1/2`` into fit, complexity and misspecification.

    The last term is the KL divergence between ``N(0, B_hat)`` and
    ``N(0, A_hat)``; it is nonnegative up to rounding.
    """
    _check_dim(dim)
    _check_n(n)
    if not sw.B_rank_ok:
        raise DecompositionUndefinedError("B_hat is singular; log|H| is undefined")
    return SicDecomposition(
        neg_loglik=-loglik,
        complexity=0.5 * (1.0 + math.log(n)) * dim,
        misspec_kl=0.5 * (sw.trace_H - sw.logdet_H - dim),
    )


@dataclass
class CriterionReport:
    aic: float
    bic: float
    gaic: float
    gbic: float
    sic: dict[float, float]
    decomposition_half: SicDecomposition | None
    model_dim: int
    n: int
    trace_H: float = math.nan
    logdet_H: float = math.nan

    def score(self, name: str) -> float:
        """Look up a criterion by name: aic, bic, gaic, gbic, sic or sic_<gamma>."""
        key = name.lower()
        if key in ("aic", "bic", "gaic", "gbic"):
            return getattr(self, key)
        gamma = parse_sic_name(key)
        if gamma in self.sic:
            return self.sic[gamma]
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "aic": self.aic,
            "bic": self.bic,
            "gaic": self.gaic,
            "gbic": self.gbic,
            "sic": {format_gamma(g): v for g, v in sorted(self.sic.items())},
            "decomposition_half": None
            if self.decomposition_half is None
            else {
                "neg_loglik": self.decomposition_half.neg_loglik,
                "complexity": self.decomposition_half.complexity,
                "misspec_kl": self.decomposition_half.misspec_kl,
            },
            "model_dim": self.model_dim,
            "n": self.n,
            "trace_H": self.trace_H,
            "logdet_H": self.logdet_H,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CriterionReport:
        dec = d.get("decomposition_half")
        return cls(
            aic=d["aic"],
            bic=d["bic"],
            gaic=d["gaic"],
            gbic=d["gbic"],
            sic={float(g): v for g, v in d["sic"].items()},
            decomposition_half=None if dec is None else SicDecomposition(**dec),
            model_dim=d["model_dim"],
            n=d["n"],
            trace_H=d.get("trace_H", math.nan),
            logdet_H=d.get("logdet_H", math.nan),
        )


def format_gamma(gamma: float) -> str:
    return repr(float(gamma))


def parse_sic_name(name: str) -> float:
    """``"sic"`` means gamma = 1/2; ``"sic_0.25"`` selects another index."""
    name = name.lower()
    if name == "sic":
        return 0.5
    if name.startswith("sic_"):
        gamma = float(name[4:])
        gamma_weights(gamma)
        return gamma
    raise KeyError(name)


def score_model(loglik: float, sw: SandwichPair, dim: int, n: int, gammas=DEFAULT_GAMMAS) -> CriterionReport:
    gammas = sorted(set(float(g) for g in gammas) | {0.5})
    decomposition = sic_half_decomposition(loglik, sw, dim, n) if sw.B_rank_ok else None
    return CriterionReport(
        aic=aic(loglik, dim),
        bic=bic(loglik, dim, n),
        gaic=gaic(loglik, sw),
        gbic=gbic(loglik, sw, dim, n),
        sic={g: sic(loglik, sw, dim, n, g) for g in gammas},
        decomposition_half=decomposition,
        model_dim=dim,
        n=n,
        trace_H=sw.trace_H,
        logdet_H=sw.logdet_H,
    )
