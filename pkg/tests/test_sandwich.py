import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miscrit.errors import ModelDegenerateError
from miscrit.family import Family
from miscrit.qmle import Dataset, fit_qmle
from miscrit.sandwich import SandwichPair, estimate_sandwich
from oracles import dense_contrast


def _fit_pair(y, X, family):
    data = Dataset(y, X)
    fit = fit_qmle(data, family)
    return fit, estimate_sandwich(data, family, fit)


def test_constant_residuals_give_scaled_identity():
    # columns orthogonal to 1, so least squares leaves exactly the constant c behind
    rng = np.random.default_rng(0)
    n, d, c = 40, 3, 0.7
    Z = rng.standard_normal((n, d))
    X = Z - Z.mean(axis=0)
    y = X @ [1.0, -1.0, 2.0] + c
    fit, sw = _fit_pair(y, X, Family.linear())
    ratio = c * c / fit.dispersion
    assert ratio == pytest.approx((n - d) / n, rel=1e-12)
    assert sw.trace_H == pytest.approx(d * ratio, rel=1e-10)
    assert sw.logdet_H == pytest.approx(d * math.log(ratio), rel=1e-10)
    np.testing.assert_allclose(sw.H, ratio * np.eye(d), atol=1e-10)


def test_linear_matrices_follow_least_squares_form():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((50, 2))
    y = X @ [1.0, 0.5] + rng.standard_normal(50)
    fit, sw = _fit_pair(y, X, Family.linear())
    r = y - X @ np.linalg.lstsq(X, y, rcond=None)[0]
    np.testing.assert_allclose(sw.A_hat, fit.dispersion * X.T @ X, rtol=1e-12)
    np.testing.assert_allclose(sw.B_hat, X.T @ np.diag(r * r) @ X, rtol=1e-10)


def test_logistic_contrast_matches_dense_solve():
    rng = np.random.default_rng(2)
    n = 300
    X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
    # misspecified: true link is a probit-like step with noise
    y = (X @ [0.2, 1.0, -0.7] + rng.standard_normal(n) > 0).astype(float)
    fit, sw = _fit_pair(y, X, Family.logistic())
    assert fit.converged
    mu = 1 / (1 + np.exp(-X @ fit.beta_hat))
    A = sum(m * (1 - m) * np.outer(x, x) for m, x in zip(mu, X))
    B = sum((yi - m) ** 2 * np.outer(x, x) for yi, m, x in zip(y, mu, X))
    H, tr, logdet = dense_contrast(A, B)
    np.testing.assert_allclose(sw.A_hat, A, rtol=1e-10)
    np.testing.assert_allclose(sw.B_hat, B, rtol=1e-10)
    np.testing.assert_allclose(sw.H, H, rtol=1e-10, atol=1e-12)
    assert sw.trace_H == pytest.approx(tr, rel=1e-10)
    assert sw.logdet_H == pytest.approx(logdet, rel=1e-10, abs=1e-10)


def test_poisson_contrast_matches_dense_solve():
    rng = np.random.default_rng(3)
    n = 200
    X = np.column_stack([np.ones(n), rng.standard_normal(n)])
    # overdispersed counts
    y = rng.negative_binomial(2, 2 / (2 + np.exp(0.5 + 0.4 * X[:, 1]))).astype(float)
    fit, sw = _fit_pair(y, X, Family.poisson())
    mu = np.exp(X @ fit.beta_hat)
    _, tr, logdet = dense_contrast(X.T @ (mu[:, None] * X), X.T @ (((y - mu) ** 2)[:, None] * X))
    assert sw.trace_H == pytest.approx(tr, rel=1e-10)
    assert sw.logdet_H == pytest.approx(logdet, rel=1e-10)
    # overdispersion inflates B relative to A
    assert sw.trace_H > 2


def test_correct_specification_trace_near_dimension():
    traces, logdets = [], []
    for seed in range(50):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((2000, 3))
        y = X @ [1.0, -0.5, 0.25] + rng.standard_normal(2000)
        _, sw = _fit_pair(y, X, Family.linear())
        traces.append(sw.trace_H)
        logdets.append(sw.logdet_H)
    assert np.median(np.abs(np.array(traces) - 3)) <= 0.5
    assert np.median(np.abs(logdets)) <= 0.5


def test_singular_outer_product():
    # the first residual is identically zero, leaving B = diag(0, 2 r^2)
    X = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0]])
    y = np.array([3.0, 1.0, 2.0])
    fit, sw = _fit_pair(y, X, Family.linear())
    assert not sw.B_rank_ok
    assert sw.logdet_H == -math.inf
    assert math.isfinite(sw.trace_H) and sw.trace_H > 0


def test_too_few_nonzero_residuals_is_singular():
    A = np.eye(3)
    sw = SandwichPair.from_matrices(A, np.eye(3), residual_support=2)
    assert not sw.B_rank_ok and sw.logdet_H == -math.inf
    assert sw.trace_H == pytest.approx(3.0)


def test_non_positive_definite_model_matrix():
    with pytest.raises(ModelDegenerateError):
        SandwichPair.from_matrices(np.diag([1.0, -1.0]), np.eye(2))


def _spd(rng, d, scale=1.0):
    M = rng.standard_normal((d, d + 2))
    return scale * (M @ M.T) / (d + 2) + 1e-3 * np.eye(d)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_contrast_invariants(seed, d):
    rng = np.random.default_rng(seed)
    A, B = _spd(rng, d), _spd(rng, d, scale=rng.uniform(0.1, 10))
    sw = SandwichPair.from_matrices(A, B)
    assert sw.trace_H >= -1e-10
    assert sw.B_rank_ok
    assert 0.5 * (sw.trace_H - sw.logdet_H - d) >= -1e-10
    _, tr, logdet = dense_contrast(A, B)
    assert sw.trace_H == pytest.approx(tr, rel=1e-9)
    assert sw.logdet_H == pytest.approx(logdet, rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_orthogonal_reparametrization_invariance(seed):
    rng = np.random.default_rng(seed)
    n = 120
    X = np.column_stack([np.ones(n), rng.standard_normal((n, 2))])
    y = rng.poisson(np.exp(0.3 + 0.2 * X[:, 1] - 0.1 * X[:, 2] ** 2)).astype(float)
    Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    _, sw = _fit_pair(y, X, Family.poisson())
    _, sw_q = _fit_pair(y, X @ Q, Family.poisson())
    assert sw_q.trace_H == pytest.approx(sw.trace_H, abs=1e-8)
    assert sw_q.logdet_H == pytest.approx(sw.logdet_H, abs=1e-8)


def test_estimates_are_symmetric():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((100, 4)) * [1, 10, 100, 1000]
    y = X @ [1, 0.1, 0.01, 0.001] + rng.standard_normal(100)
    _, sw = _fit_pair(y, X, Family.linear())
    for M in (sw.A_hat, sw.B_hat):
        assert np.max(np.abs(M - M.T)) <= 1e-12 * np.max(np.abs(M))
