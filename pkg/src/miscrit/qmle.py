"""Quasi-maximum likelihood fitting of the working GLM.

The QMLE maximizes ``l(beta) = y' X beta - sum b(X beta)`` (the base-measure
term is dropped since it does not depend on ``beta``).  The objective is
strictly concave, so logistic and Poisson fits use damped Newton from zero;
the linear model is solved in closed form via least squares.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DataValidationError,
    DesignRankError,
    DispersionError,
    NonFiniteLinkError,
    SeparationWarning,
)
from .family import Family, Kind, b_sum, evaluate_link

_EPS = np.finfo(float).eps
_MAX_HALVINGS = 30
_SEPARATION_BETA_NORM = 1e6
_SEPARATION_RESID = 1e-6


@dataclass(frozen=True)
class Dataset:
    """Response vector ``y`` (length n) and design matrix ``X`` (n x d)."""

    y: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=float).reshape(-1)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError(f"X has shape {X.shape}, expected ({y.shape[0]}, d)")
        n, d = X.shape
        if n < 1 or not 1 <= d <= n:
            raise DesignRankError(f"need n >= 1 and 1 <= d <= n, got n={n}, d={d}")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataValidationError("y and X must be finite")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def validate_responses(self, family: Family) -> None:
        if family.kind is Kind.LOGISTIC:
            bad = np.flatnonzero((self.y != 0.0) & (self.y != 1.0))
            what = "logistic responses must be 0 or 1"
        elif family.kind is Kind.POISSON:
            bad = np.flatnonzero((self.y < 0) | (self.y != np.floor(self.y)))
            what = "Poisson responses must be nonnegative integers"
        else:
            return
        if bad.size:
            i = int(bad[0])
            err = DataValidationError(f"{what}; row {i} has y = {self.y[i]!r}")
            err.row = i
            raise err


def check_rank(X: np.ndarray) -> int:
    """Numerical rank from a column-pivoted QR; raises if not full column rank."""
    R = scipy.linalg.qr(X, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(R))
    tol = max(X.shape) * _EPS * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    if rank < X.shape[1]:
        raise DesignRankError(f"design matrix has rank {rank} < {X.shape[1]} columns")
    return rank


@dataclass(frozen=True)
class FitResult:
    beta_hat: np.ndarray
    loglik: float
    dispersion: float
    iterations: int
    converged: bool
    score_norm: float
    family: Family
    separated: bool = False
    # quasi-log-likelihood after every accepted Newton step (starting point first)
    loglik_path: tuple = field(default=(), repr=False)

    @property
    def resolved_family(self) -> Family:
        return self.family.with_dispersion(self.dispersion)


def quasi_log_likelihood(data: Dataset, family: Family, beta) -> float:
    theta = data.X @ np.asarray(beta, dtype=float)
    return float(data.y @ theta) - b_sum(family, theta)


def _score(data: Dataset, family: Family, beta: np.ndarray) -> np.ndarray:
    mu = evaluate_link(family, data.X @ beta).mu
    return data.X.T @ (data.y - mu)


def _fit_linear(data: Dataset, family: Family, tol_score: float) -> FitResult:
    n, d = data.n, data.d
    if family.estimates_dispersion and n <= d:
        raise DispersionError(f"dispersion undefined: n = {n} <= d = {d}")
    Q, R = np.linalg.qr(data.X)
    gamma = scipy.linalg.solve_triangular(R, Q.T @ data.y)
    resid = data.y - data.X @ gamma
    score = data.X.T @ resid
    if np.max(np.abs(score)) > tol_score:
        # one round of iterative refinement
        gamma = gamma + scipy.linalg.solve_triangular(R, Q.T @ resid)
        resid = data.y - data.X @ gamma
    rss = float(resid @ resid)

    if family.estimates_dispersion:
        if rss <= (n * _EPS * np.linalg.norm(data.y)) ** 2:
            raise DispersionError("dispersion degenerate: residual sum of squares is zero")
        sigma2 = rss / (n - d)
    else:
        sigma2 = float(family.dispersion)

    beta = gamma / sigma2
    resolved = family.with_dispersion(sigma2)
    score_norm = float(np.max(np.abs(_score(data, resolved, beta))))
    loglik = -rss / (2 * sigma2) - 0.5 * n * math.log(sigma2) - 0.5 * n * math.log(2 * math.pi)
    return FitResult(
        beta_hat=beta,
        loglik=loglik,
        dispersion=sigma2,
        iterations=0,
        converged=score_norm <= tol_score,
        score_norm=score_norm,
        family=family,
        loglik_path=(loglik,),
    )


def _newton_direction(H: np.ndarray, g: np.ndarray, ridge: float) -> np.ndarray:
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(H), g)
    except np.linalg.LinAlgError:
        pass
    if ridge > 0:
        return scipy.linalg.solve(H + ridge * np.eye(H.shape[0]), g, assume_a="pos")
    return np.linalg.lstsq(H, g, rcond=None)[0]


def _fit_newton(data, family, tol_score, max_iter, ridge, beta_init) -> FitResult:
    X, y = data.X, data.y
    beta = np.zeros(data.d) if beta_init is None else np.array(beta_init, dtype=float)
    ll = quasi_log_likelihood(data, family, beta)
    path = [ll]
    iterations = 0
    converged = False
    separated = False

    while True:
        lv = evaluate_link(family, X @ beta)
        score = X.T @ (y - lv.mu)
        score_norm = float(np.max(np.abs(score)))
        if score_norm <= tol_score:
            converged = True
            break
        if iterations >= max_iter:
            break
        if np.linalg.norm(beta) > _SEPARATION_BETA_NORM:
            separated = True
            break
        H = (X * lv.sigma_diag[:, None]).T @ X
        step = _newton_direction(H, score, ridge)
        # the objective is only known to rounding accuracy near the optimum
        slack = 64 * _EPS * max(1.0, abs(ll))
        t = 1.0
        accepted = False
        for _ in range(_MAX_HALVINGS + 1):
            trial = beta + t * step
            try:
                ll_trial = quasi_log_likelihood(data, family, trial)
            except NonFiniteLinkError:
                ll_trial = -np.inf
            if ll_trial >= ll - slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        beta, ll = trial, ll_trial
        path.append(ll)
        iterations += 1

    if family.kind is Kind.LOGISTIC and not separated:
        mu = evaluate_link(family, X @ beta).mu
        separated = bool(np.max(np.abs(y - mu)) < _SEPARATION_RESID)
    if separated:
        converged = False
        warnings.warn(
            "logistic responses appear separated; the QMLE does not exist",
            SeparationWarning,
            stacklevel=3,
        )
    return FitResult(
        beta_hat=beta,
        loglik=ll,
        dispersion=1.0,
        iterations=iterations,
        converged=converged,
        score_norm=score_norm,
        family=family,
        separated=separated,
        loglik_path=tuple(path),
    )


def fit_qmle(
    data: Dataset,
    family: Family,
    tol_score: float = 1e-8,
    max_iter: int = 100,
    ridge_on_singular: float = 0.0,
    beta_init=None,
) -> FitResult:
    """Fit the working GLM by quasi-maximum likelihood.

    Parameters
    ----------
    data : Dataset
    family : Family
    tol_score : float
        Convergence threshold on the sup-norm of the score ``X'(y - mu)``.
    max_iter : int
        Newton iteration cap for logistic and Poisson fits.
    ridge_on_singular : float
        Ridge added to the Newton Hessian only when its Cholesky fails.
        Zero falls back to a least-squares direction instead.
    beta_init : array, optional
        Newton starting point; zero by default.

    Returns
    -------
    FitResult
        Non-convergence is reported through ``converged=False`` rather than
        raised.  For the linear family ``loglik`` is the full Gaussian
        log-likelihood evaluated at the estimated dispersion.

    Raises
    ------
    DesignRankError
        If ``X`` is rank deficient.
    DispersionError
        If the linear dispersion must be estimated and ``n <= d`` or the
        fit is exact.
    """
    data.validate_responses(family)
    check_rank(data.X)
    if family.kind is Kind.LINEAR:
        return _fit_linear(data, family, tol_score)
    return _fit_newton(data, family, tol_score, max_iter, ridge_on_singular, beta_init)
