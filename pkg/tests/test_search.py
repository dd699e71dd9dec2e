import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from miscrit.errors import SelectionImpossibleError, TooManyPredictorsError
from miscrit.family import Family
from miscrit.qmle import fit_qmle
from miscrit.search import (
    CandidateModel,
    CandidateOutcome,
    RawData,
    SelectionResult,
    all_subsets,
    argmin_candidate,
    best_subset_per_size,
    build_design,
    polynomial_candidates,
    select,
)
from oracles import exhaustive_best_subsets


def test_polynomial_design_row():
    raw = RawData(np.zeros(5), np.array([2.0, -1.0, 0.0, 0.5, 3.0]))
    X = build_design(raw, CandidateModel.polynomial(3)).X
    np.testing.assert_array_equal(X[0], [1, 2, 4, 8])
    np.testing.assert_array_equal(X[1], [1, -1, 1, -1])


def test_subset_design_columns():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((10, 6))
    D = build_design(RawData(rng.standard_normal(10), X), CandidateModel.subset([0, 2])).X
    assert D.shape == (10, 2)
    np.testing.assert_array_equal(D, X[:, [0, 2]])


def test_order_one_equals_subset_with_intercept():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(50)
    raw = RawData(1 + 2 * x + rng.standard_normal(50), x)
    a = fit_qmle(build_design(raw, CandidateModel.polynomial(1)), Family.linear())
    b = fit_qmle(build_design(raw, CandidateModel.subset([0], include_intercept=True)), Family.linear())
    np.testing.assert_allclose(a.beta_hat, b.beta_hat, rtol=1e-12)
    assert a.loglik == pytest.approx(b.loglik, rel=1e-12)


def test_candidate_validation_and_labels():
    with pytest.raises(ValueError):
        CandidateModel(order=2, indices=(0,))
    with pytest.raises(ValueError):
        CandidateModel.polynomial(0)
    with pytest.raises(ValueError):
        CandidateModel(indices=(2, 1))
    assert CandidateModel.polynomial(3).label == "poly3+1"
    assert CandidateModel.subset([2, 0]).label == "{0,2}"
    assert CandidateModel.polynomial(3).dim == 4 and CandidateModel.polynomial(3).size == 3
    assert CandidateModel.subset([1, 4]).dim == 2


def test_all_subsets_enumeration():
    subs = all_subsets(6, range(1, 7))
    assert len(subs) == 63
    assert [c.size for c in subs] == sorted(c.size for c in subs)
    with pytest.raises(TooManyPredictorsError):
        all_subsets(21, [1])
    assert len(all_subsets(20, [1])) == 20


def test_orthonormal_best_subset_is_top_inner_products():
    rng = np.random.default_rng(2)
    Q, _ = np.linalg.qr(rng.standard_normal((40, 5)))
    y = Q @ [3.0, -0.2, 1.5, 0.7, -2.2] + 0.1 * rng.standard_normal(40)
    raw = RawData(y, Q)
    best = best_subset_per_size(raw, range(1, 6), Family.linear())
    order = np.argsort(-np.abs(Q.T @ y))
    brute = exhaustive_best_subsets(y, Q)
    for cand in best:
        k = cand.size
        assert cand.indices == tuple(sorted(order[:k]))
        assert cand.indices == brute[k]


def test_best_subset_matches_brute_force_p6():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((80, 6))
    y = X @ [1.0, -1.25, 0.75, 0, 0, 0] + rng.standard_normal(80)
    best = best_subset_per_size(RawData(y, X), range(1, 7), Family.linear())
    brute = exhaustive_best_subsets(y, X)
    assert {c.size: c.indices for c in best} == brute
    rss = []
    for c in best:
        Xs = X[:, c.indices]
        r = y - Xs @ np.linalg.lstsq(Xs, y, rcond=None)[0]
        rss.append(float(r @ r))
    assert all(b <= a * (1 + 1e-12) for a, b in zip(rss, rss[1:]))


def _cubic_raw(seed, n=200, sigma=0.5):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    y = 1 + 5 * x - 1.25 * x**2 + 0.55 * x**3 + sigma * rng.standard_normal(n)
    return RawData(y, x)


def test_single_candidate_is_chosen_by_every_criterion():
    res = select([CandidateModel.polynomial(2)], _cubic_raw(4), Family.linear())
    assert all(m == CandidateModel.polynomial(2) for m in res.chosen.values())


def _fake(score, dim):
    cand = CandidateModel.subset(range(dim))
    return CandidateOutcome(cand, SimpleNamespace(score=lambda _c: score))


def test_tie_goes_to_smaller_dimension_then_earlier_index():
    outcomes = [_fake(5.0, 3), _fake(5.0, 2), _fake(6.0, 1), _fake(5.0, 2)]
    assert argmin_candidate(outcomes, "aic") == 1
    outcomes = [_fake(math.nan, 1), _fake(7.0, 4)]
    assert argmin_candidate(outcomes, "aic") == 1


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-100, 100))
def test_choice_invariant_under_response_affine_map(seed, scale, shift):
    # affine maps of y shift every linear loglik by the same constant
    raw = _cubic_raw(seed, n=60, sigma=1.0)
    cands = polynomial_candidates(range(1, 7))
    a = select(cands, raw, Family.linear())
    b = select(cands, RawData(scale * raw.y + shift, raw.X), Family.linear())
    assert a.reported_size == b.reported_size


def test_selection_deterministic():
    raw = _cubic_raw(5)
    cands = polynomial_candidates(range(1, 7))
    a = json.dumps(select(cands, raw, Family.linear()).to_dict(), sort_keys=True)
    b = json.dumps(select(cands, raw, Family.linear()).to_dict(), sort_keys=True)
    assert a == b


def test_cubic_data_selects_order_three():
    res = select(polynomial_candidates(range(1, 7)), _cubic_raw(6), Family.linear())
    assert res.reported_size["sic"] == 3
    assert res.reported_size["bic"] == 3


def test_failed_candidates_are_recorded_not_chosen():
    rng = np.random.default_rng(7)
    x = rng.standard_normal(6)
    raw = RawData(1 + x + 0.1 * rng.standard_normal(6), x)
    # order 5 with intercept leaves n == d, order 6 is rank deficient
    res = select(polynomial_candidates([1, 5, 6]), raw, Family.linear())
    errors = [o.error for o in res.per_candidate]
    assert errors[0] is None and errors[1] and errors[2]
    assert set(res.reported_size.values()) == {1}


def test_selection_impossible():
    raw = RawData(np.array([1.0, 2.0, 3.0]), np.array([1.0, 2.0, 3.0]))
    with pytest.raises(SelectionImpossibleError):
        select([CandidateModel.polynomial(1)], raw, Family.linear())


def test_json_round_trip():
    res = select(polynomial_candidates(range(1, 5)), _cubic_raw(8), Family.linear(), criteria=("aic", "sic_0.25"))
    d = json.loads(json.dumps(res.to_dict()))
    back = SelectionResult.from_dict(d)
    assert back.chosen == res.chosen
    assert back.to_dict() == res.to_dict()
