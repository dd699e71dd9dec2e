"""Model-based and outer-product covariance estimates of ``X'Y``.

``A_hat = X' diag(b''(X beta_hat)) X`` is the covariance implied by the fitted
working model; ``B_hat = X' diag(r * r) X`` with ``r = y - mu(X beta_hat)`` is the
empirical one.  Their contrast ``H = A_hat^{-1} B_hat`` equals the identity
under correct specification; its trace and log-determinant drive the
misspecification-aware criteria.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ModelDegenerateError
from .family import evaluate_link
from .qmle import Dataset, FitResult


@dataclass(frozen=True)
class SandwichPair:
    A_hat: np.ndarray
    B_hat: np.ndarray
    trace_H: float
    logdet_H: float
    B_rank_ok: bool

    @property
    def d(self) -> int:
        return self.A_hat.shape[0]

    @property
    def H(self) -> np.ndarray:
        return np.linalg.solve(self.A_hat, self.B_hat)

    @classmethod
    def from_matrices(cls, A, B, residual_support: int | None = None) -> SandwichPair:
        """Build the pair from explicit symmetric matrices.

        ``residual_support`` is the number of nonzero residuals behind ``B``;
        fewer than ``d`` of them makes ``B`` singular regardless of what the
        Cholesky factorization reports under rounding.
        """
        A = np.asarray(A, dtype=float)
        B = np.asarray(B, dtype=float)
        try:
            L_A = np.linalg.cholesky(A)
        except np.linalg.LinAlgError as exc:
            raise ModelDegenerateError("model-based information matrix is not positive definite") from exc

        # L^{-1} B L^{-T} is similar to A^{-1} B and symmetric PSD
        M = scipy.linalg.solve_triangular(L_A, B, lower=True)
        W = scipy.linalg.solve_triangular(L_A, M.T, lower=True)
        trace_H = float(np.trace(W))

        logdet_A = 2.0 * float(np.sum(np.log(np.diag(L_A))))
        B_ok = residual_support is None or residual_support >= A.shape[0]
        logdet_H = -np.inf
        if B_ok:
            try:
                L_B = np.linalg.cholesky(B)
            except np.linalg.LinAlgError:
                B_ok = False
            else:
                diag_B = np.diag(L_B)
                if np.all(diag_B > 0) and np.all(np.isfinite(diag_B)):
                    logdet_H = 2.0 * float(np.sum(np.log(diag_B))) - logdet_A
                else:
                    B_ok = False
        return cls(A, B, trace_H, float(logdet_H), B_ok)


def _gram(X: np.ndarray, w: np.ndarray) -> np.ndarray:
    G = (X * w[:, None]).T @ X
    return 0.5 * (G + G.T)


def estimate_sandwich(data: Dataset, family, fit: FitResult) -> SandwichPair:
    """Estimate ``A_hat``, ``B_hat`` and the contrast summaries at ``fit.beta_hat``.

    For the linear family the fitted dispersion is used, which gives
    ``A_hat = sigma2_hat X'X`` and least-squares residuals in ``B_hat``.
    """
    resolved = family.with_dispersion(fit.dispersion) if family.estimates_dispersion else family
    lv = evaluate_link(resolved, data.X @ fit.beta_hat)
    r = data.y - lv.mu
    A = _gram(data.X, lv.sigma_diag)
    B = _gram(data.X, r * r)
    return SandwichPair.from_matrices(A, B, residual_support=int(np.count_nonzero(r)))
