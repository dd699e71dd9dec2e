"""Seeded Monte-Carlo campaigns for the five selection experiments.

Every replicate draws from its own Philox stream keyed by ``(seed, replicate)``,
so a campaign's frequency table does not depend on scheduling or on how many
worker threads run it.
"""

from __future__ import annotations

import enum
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import MiscritError
from .family import Family
from .search import RawData, all_subsets, polynomial_candidates, select

BETA0 = np.array([1.0, -1.25, 0.75, 0.0, 0.0, 0.0])
CUBIC = (1.0, 5.0, -1.25, 0.55)
HETERO_CUBIC = (1.0, 5.0, -1.25, 1.55)
INTERACTION_COEF = 0.5
SINGLE_INDEX_GUARD = 1e-8
TABLE_CRITERIA = ("aic", "gaic", "bic", "gbic", "sic")
RNG_METHOD = "numpy Philox, SeedSequence(seed, spawn_key=(replicate,)), ziggurat normals"
FAILED = "failed"


class Experiment(str, enum.Enum):
    POLY_CUBIC = "poly_cubic"
    BEST_SUBSET_LINEAR = "best_subset_linear"
    INTERACTION = "interaction"
    SINGLE_INDEX = "single_index"
    HETERO_POLY = "hetero_poly"

    @property
    def is_polynomial(self) -> bool:
        return self in (Experiment.POLY_CUBIC, Experiment.HETERO_POLY)


class Sample(NamedTuple):
    X: np.ndarray
    y: np.ndarray
    redraws: int = 0


def replicate_rng(seed: int, replicate: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(ss))


def _cubic(x, coefs):
    c0, c1, c2, c3 = coefs
    return c0 + x * (c1 + x * (c2 + x * c3))


def ar_half_cov(p: int) -> np.ndarray:
    idx = np.arange(p)
    return 0.5 ** np.abs(idx[:, None] - idx[None, :])


def _gaussian_rows(n, p, corr, rng):
    Z = rng.standard_normal((n, p))
    if corr == "ar_half":
        return Z @ np.linalg.cholesky(ar_half_cov(p)).T
    if corr == "identity":
        return Z
    raise ValueError(f"unknown covariance {corr!r}")


def gen_poly_cubic(n: int, sigma: float, rng) -> Sample:
    x = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    return Sample(x[:, None], _cubic(x, CUBIC) + sigma * eps)


def gen_subset_linear(n: int, sigma: float, rng, p: int = 6, corr: str = "ar_half") -> Sample:
    X = _gaussian_rows(n, p, corr, rng)
    eps = rng.standard_normal(n)
    return Sample(X, X @ BETA0[:p] + sigma * eps)


def gen_interaction(n: int, sigma: float, rng, p: int = 6) -> Sample:
    X = _gaussian_rows(n, p, "identity", rng)
    eps = rng.standard_normal(n)
    y = X @ BETA0[:p] + INTERACTION_COEF * X[:, 0] * X[:, 1] + sigma * eps
    return Sample(X, y)


def single_index_link(z, a: float):
    return z * z / (a + z)


def gen_single_index(n: int, a: float, rng, p: int = 6) -> Sample:
    X = _gaussian_rows(n, p, "identity", rng)
    redraws = 0
    while True:
        bad = np.flatnonzero(np.abs(a + X @ BETA0[:p]) < SINGLE_INDEX_GUARD)
        if bad.size == 0:
            break
        redraws += bad.size
        X[bad] = rng.standard_normal((bad.size, p))
    eps = rng.standard_normal(n)
    return Sample(X, single_index_link(X @ BETA0[:p], a) + eps, redraws)


def gen_hetero_poly(n: int, sigma: float, rng) -> Sample:
    x = rng.standard_normal(n)
    eps = rng.standard_normal(n)
    return Sample(x[:, None], _cubic(x, HETERO_CUBIC) + np.sqrt(np.abs(x)) * sigma * eps)


@dataclass
class SimConfig:
    """One cell of a simulation table.

    ``noise`` is sigma for every experiment except ``single_index``, where it
    is the curvature ``a`` of the link.
    """

    experiment: Experiment
    n: int
    noise: float
    replicates: int = 100
    seed: int = 0
    criteria: tuple[str, ...] = TABLE_CRITERIA
    candidates: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    p: int = 6

    def __post_init__(self):
        self.experiment = Experiment(self.experiment)
        self.criteria = tuple(c.lower() for c in self.criteria)
        self.candidates = tuple(int(k) for k in self.candidates)
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.noise < 0 or (self.experiment is Experiment.SINGLE_INDEX and self.noise <= 0):
            raise ValueError(f"invalid noise parameter {self.noise}")
        if not self.candidates or min(self.candidates) < 1:
            raise ValueError("candidate orders/sizes must be >= 1")
        if not self.experiment.is_polynomial and max(self.candidates) > self.p:
            raise ValueError(f"subset sizes exceed p = {self.p}")
        max_dim = max(self.candidates) + int(self.experiment.is_polynomial)
        if self.n < max_dim + 2:
            raise ValueError(f"n = {self.n} too small for candidate dimension {max_dim}")

    @property
    def noise_key(self) -> str:
        return "a" if self.experiment is Experiment.SINGLE_INDEX else "sigma"

    def to_dict(self) -> dict:
        key = "orders" if self.experiment.is_polynomial else "sizes"
        return {
            "experiment": self.experiment.value,
            "n": self.n,
            self.noise_key: self.noise,
            "replicates": self.replicates,
            "seed": int(self.seed),
            "criteria": list(self.criteria),
            "candidates": {key: list(self.candidates)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> SimConfig:
        d = dict(d)
        exp = Experiment(d.pop("experiment"))
        noise_key = "a" if exp is Experiment.SINGLE_INDEX else "sigma"
        if noise_key not in d:
            raise ValueError(f"config for {exp.value} needs {noise_key!r}")
        cands = d.pop("candidates", {}) or {}
        cand_list = cands.get("orders") or cands.get("sizes") or (1, 2, 3, 4, 5, 6)
        kwargs = dict(
            experiment=exp,
            n=int(d.pop("n")),
            noise=float(d.pop(noise_key)),
            replicates=int(d.pop("replicates", 100)),
            seed=int(d.pop("seed", 0)),
            criteria=tuple(d.pop("criteria", TABLE_CRITERIA)),
            candidates=tuple(cand_list),
        )
        if "p" in d:
            kwargs["p"] = int(d.pop("p"))
        if d:
            raise ValueError(f"unknown config keys: {sorted(d)}")
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path) -> SimConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def generate(cfg: SimConfig, rng) -> Sample:
    exp = cfg.experiment
    if exp is Experiment.POLY_CUBIC:
        return gen_poly_cubic(cfg.n, cfg.noise, rng)
    if exp is Experiment.BEST_SUBSET_LINEAR:
        return gen_subset_linear(cfg.n, cfg.noise, rng, p=cfg.p)
    if exp is Experiment.INTERACTION:
        return gen_interaction(cfg.n, cfg.noise, rng, p=cfg.p)
    if exp is Experiment.SINGLE_INDEX:
        return gen_single_index(cfg.n, cfg.noise, rng, p=cfg.p)
    return gen_hetero_poly(cfg.n, cfg.noise, rng)


def campaign_candidates(cfg: SimConfig):
    if cfg.experiment.is_polynomial:
        return polynomial_candidates(cfg.candidates, include_intercept=True)
    # every subset is scored so misspecification-aware criteria see all of them
    return all_subsets(cfg.p, cfg.candidates, include_intercept=False)


def run_replicate(cfg: SimConfig, replicate: int) -> tuple[dict, int]:
    """Return the chosen size per criterion (or ``FAILED``) and the redraw count."""
    sample = generate(cfg, replicate_rng(cfg.seed, replicate))
    raw = RawData(sample.y, sample.X)
    try:
        result = select(campaign_candidates(cfg), raw, Family.linear(), cfg.criteria)
    except MiscritError:
        return {c: FAILED for c in cfg.criteria}, sample.redraws
    return result.reported_size, sample.redraws


@dataclass
class FrequencyTable:
    config: SimConfig
    counts: dict[str, dict[int, int]]
    failures: dict[str, int]
    redraws: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def rows(self) -> tuple[str, ...]:
        return self.config.criteria

    @property
    def columns(self) -> tuple[int, ...]:
        return self.config.candidates

    def row_total(self, criterion: str) -> int:
        return sum(self.counts[criterion].values()) + self.failures[criterion]

    def count(self, criterion: str, size: int) -> int:
        return self.counts[criterion][size]

    def modal(self, criterion: str) -> int:
        row = self.counts[criterion]
        return max(self.columns, key=lambda k: (row[k], -k))

    def to_dict(self) -> dict:
        return {
            "criteria": [c.upper() for c in self.rows],
            "candidates": list(self.columns),
            "chosen": {
                c.upper(): {str(k): self.counts[c][k] for k in self.columns} for c in self.rows
            },
            "failures": {c.upper(): self.failures[c] for c in self.rows},
            "meta": {
                "config": self.config.to_dict(),
                "column_kind": "order" if self.config.experiment.is_polynomial else "size",
                "redraws": self.redraws,
                "rng": RNG_METHOD,
                **self.meta,
            },
        }


def _thread_count(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("MISCRIT_THREADS", "1") or 1)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def run_campaign(cfg: SimConfig, threads: int | None = None) -> FrequencyTable:
    """Run all replicates of ``cfg`` and tally the selected sizes.

    ``threads`` defaults to ``$MISCRIT_THREADS`` (0 means one per CPU, unset
    means serial).  The result is identical for any thread count.
    """
    workers = _thread_count(threads)
    reps = range(cfg.replicates)
    if workers == 1:
        outcomes = [run_replicate(cfg, r) for r in reps]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(lambda r: run_replicate(cfg, r), reps))

    counts = {c: {k: 0 for k in cfg.candidates} for c in cfg.criteria}
    failures = {c: 0 for c in cfg.criteria}
    redraws = 0
    for chosen, nredraw in outcomes:
        redraws += nredraw
        for c in cfg.criteria:
            if chosen[c] == FAILED:
                failures[c] += 1
            else:
                counts[c][chosen[c]] += 1
    return FrequencyTable(cfg, counts, failures, redraws)


CONFIG_DIR = Path(__file__).with_name("configs")


def packaged_configs() -> list[str]:
    return sorted(p.name for p in CONFIG_DIR.glob("*.json"))


def resolve_config_path(name_or_path) -> Path:
    """A filesystem path, or the name (with or without ``.json``) of a packaged config."""
    path = Path(name_or_path)
    if path.exists():
        return path
    for cand in (CONFIG_DIR / path.name, CONFIG_DIR / f"{path.name}.json"):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no config at {name_or_path} and no packaged config of that name")


def load_config(name_or_path) -> SimConfig:
    return SimConfig.from_json(resolve_config_path(name_or_path))
