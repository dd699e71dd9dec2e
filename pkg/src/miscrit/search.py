"""Candidate enumeration and argmin selection across information criteria."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .criteria import DEFAULT_GAMMAS, CriterionReport, parse_sic_name, score_model
from .errors import MiscritError, SelectionImpossibleError, TooManyPredictorsError
from .family import Family
from .qmle import Dataset, fit_qmle
from .sandwich import estimate_sandwich

MAX_SUBSET_PREDICTORS = 20
DEFAULT_CRITERIA = ("aic", "gaic", "bic", "gbic", "sic")


@dataclass(frozen=True)
class RawData:
    """Response plus the raw covariate columns before any design is built."""

    y: np.ndarray
    X: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float).reshape(-1))
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{j + 1}" for j in range(X.shape[1])))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class CandidateModel:
    """Either a polynomial of a given order in one covariate or a column subset.

    Subset indices are 0-based column positions in the raw covariate matrix.
    """

    order: int | None = None
    indices: tuple[int, ...] | None = None
    include_intercept: bool = True

    def __post_init__(self):
        if (self.order is None) == (self.indices is None):
            raise ValueError("give exactly one of order or indices")
        if self.order is not None and self.order < 1:
            raise ValueError(f"polynomial order must be >= 1, got {self.order}")
        if self.indices is not None:
            idx = tuple(int(i) for i in self.indices)
            if not idx or any(b <= a for a, b in zip(idx, idx[1:])) or idx[0] < 0:
                raise ValueError(f"subset indices must be nonempty, increasing and >= 0: {idx}")
            object.__setattr__(self, "indices", idx)

    @classmethod
    def polynomial(cls, order: int, include_intercept: bool = True) -> CandidateModel:
        return cls(order=order, include_intercept=include_intercept)

    @classmethod
    def subset(cls, indices, include_intercept: bool = False) -> CandidateModel:
        return cls(indices=tuple(sorted(indices)), include_intercept=include_intercept)

    @property
    def is_polynomial(self) -> bool:
        return self.order is not None

    @property
    def dim(self) -> int:
        base = self.order if self.is_polynomial else len(self.indices)
        return base + int(self.include_intercept)

    @property
    def size(self) -> int:
        """The tabulated model size: polynomial order or number of predictors."""
        return self.order if self.is_polynomial else len(self.indices)

    @property
    def label(self) -> str:
        icpt = "+1" if self.include_intercept else ""
        if self.is_polynomial:
            return f"poly{self.order}{icpt}"
        return "{" + ",".join(str(i) for i in self.indices) + "}" + icpt

    def to_dict(self) -> dict:
        if self.is_polynomial:
            return {"order": self.order, "include_intercept": self.include_intercept}
        return {"indices": list(self.indices), "include_intercept": self.include_intercept}

    @classmethod
    def from_dict(cls, d: dict) -> CandidateModel:
        if "order" in d:
            return cls(order=d["order"], include_intercept=d["include_intercept"])
        return cls(indices=tuple(d["indices"]), include_intercept=d["include_intercept"])


def build_design(raw: RawData, cand: CandidateModel) -> Dataset:
    if cand.is_polynomial:
        if raw.p != 1:
            raise ValueError(f"polynomial candidates need one raw covariate, got {raw.p}")
        x = raw.X[:, 0]
        cols = [x**k for k in range(1, cand.order + 1)]
    else:
        if cand.indices[-1] >= raw.p:
            raise ValueError(f"subset {cand.indices} out of range for {raw.p} covariates")
        cols = [raw.X[:, j] for j in cand.indices]
    if cand.include_intercept:
        cols.insert(0, np.ones(raw.n))
    return Dataset(raw.y, np.column_stack(cols))


def polynomial_candidates(orders, include_intercept: bool = True) -> list[CandidateModel]:
    return [CandidateModel.polynomial(k, include_intercept) for k in orders]


def all_subsets(p: int, sizes, include_intercept: bool = False) -> list[CandidateModel]:
    """Every subset of ``range(p)`` with a size in ``sizes``, by size then lexicographically."""
    if p > MAX_SUBSET_PREDICTORS:
        raise TooManyPredictorsError(f"p = {p} exceeds the enumeration bound {MAX_SUBSET_PREDICTORS}")
    return [
        CandidateModel.subset(c, include_intercept)
        for k in sizes
        if 1 <= k <= p
        for c in itertools.combinations(range(p), k)
    ]


def best_subset_per_size(
    raw: RawData, sizes, family: Family, include_intercept: bool = False
) -> list[CandidateModel]:
    """Exhaustive best-subset search: the max-loglik subset of each size.

    Subsets that fail to fit are skipped; a size with no usable subset is
    omitted from the result.
    """
    best = []
    for k in sizes:
        top, top_ll = None, -math.inf
        for cand in all_subsets(raw.p, [k], include_intercept):
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    fit = fit_qmle(build_design(raw, cand), family)
            except MiscritError:
                continue
            if fit.converged and fit.loglik > top_ll:
                top, top_ll = cand, fit.loglik
        if top is not None:
            best.append(top)
    return best


@dataclass
class CandidateOutcome:
    candidate: CandidateModel
    report: CriterionReport | None
    loglik: float = math.nan
    dispersion: float = math.nan
    converged: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate.to_dict(),
            "label": self.candidate.label,
            "loglik": self.loglik,
            "dispersion": self.dispersion,
            "converged": self.converged,
            "error": self.error,
            "scores": None if self.report is None else self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> CandidateOutcome:
        return cls(
            candidate=CandidateModel.from_dict(d["candidate"]),
            report=None if d["scores"] is None else CriterionReport.from_dict(d["scores"]),
            loglik=d["loglik"],
            dispersion=d["dispersion"],
            converged=d["converged"],
            error=d["error"],
        )


@dataclass
class SelectionResult:
    per_candidate: list[CandidateOutcome]
    chosen: dict[str, CandidateModel]
    criteria: tuple[str, ...] = DEFAULT_CRITERIA
    meta: dict = field(default_factory=dict)

    @property
    def reported_size(self) -> dict[str, int]:
        return {c: m.size for c, m in self.chosen.items()}

    def to_dict(self) -> dict:
        return {
            "criteria": list(self.criteria),
            "candidates": [o.to_dict() for o in self.per_candidate],
            "chosen": {
                c: {"candidate": m.to_dict(), "label": m.label, "size": m.size}
                for c, m in self.chosen.items()
            },
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> SelectionResult:
        return cls(
            per_candidate=[CandidateOutcome.from_dict(o) for o in d["candidates"]],
            chosen={c: CandidateModel.from_dict(v["candidate"]) for c, v in d["chosen"].items()},
            criteria=tuple(d["criteria"]),
            meta=d.get("meta", {}),
        )


def evaluate_candidate(raw: RawData, cand: CandidateModel, family: Family, gammas=DEFAULT_GAMMAS) -> CandidateOutcome:
    """Fit one candidate and score it; failures are captured, not raised."""
    try:
        data = build_design(raw, cand)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_qmle(data, family)
        if not fit.converged:
            reason = "separation" if fit.separated else "did not converge"
            return CandidateOutcome(cand, None, fit.loglik, fit.dispersion, False, reason)
        sw = estimate_sandwich(data, family, fit)
        report = score_model(fit.loglik, sw, data.d, data.n, gammas)
    except (MiscritError, ValueError) as exc:
        return CandidateOutcome(cand, None, error=f"{type(exc).__name__}: {exc}")
    return CandidateOutcome(cand, report, fit.loglik, fit.dispersion, True)


def argmin_candidate(outcomes: list[CandidateOutcome], criterion: str) -> int | None:
    """Index of the winning outcome: lowest score, then lower dimension, then earlier."""
    best, best_key = None, None
    for i, o in enumerate(outcomes):
        if o.report is None:
            continue
        key = (o.report.score(criterion), o.candidate.dim, i)
        if math.isnan(key[0]):
            continue
        if best_key is None or key < best_key:
            best, best_key = i, key
    return best


def select(
    candidates,
    raw: RawData,
    family: Family,
    criteria=DEFAULT_CRITERIA,
    gammas=DEFAULT_GAMMAS,
) -> SelectionResult:
    """Fit every candidate and pick the minimizer of each criterion.

    Candidates that cannot be fitted are kept in ``per_candidate`` with the
    failure reason and never chosen.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("need at least one candidate")
    criteria = tuple(c.lower() for c in criteria)
    sic_gammas = {parse_sic_name(c) for c in criteria if c.startswith("sic")}
    gammas = tuple(sorted(set(gammas) | sic_gammas))

    outcomes = [evaluate_candidate(raw, c, family, gammas) for c in candidates]
    if all(o.report is None for o in outcomes):
        reasons = "; ".join(f"{o.candidate.label}: {o.error}" for o in outcomes[:5])
        raise SelectionImpossibleError(f"no candidate could be fitted ({reasons})")

    chosen = {c: outcomes[argmin_candidate(outcomes, c)].candidate for c in criteria}
    return SelectionResult(outcomes, chosen, criteria, {"n": raw.n, "family": family.kind.value})
