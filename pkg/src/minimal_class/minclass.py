"""Minimal classes, top-M lists and co-occurrence counts over a model pool.

A minimal class of size ``kappa`` and efficiency ``eta`` holds every size-
``kappa`` model whose MSE is within ``eta`` of the best size-``kappa`` MSE.
When built from a search pool, "best" means best *within the pool*.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .core import Dataset
from .errors import BudgetExceeded, DegenerateFit, EmptySize, InvalidConfig
from .search import ModelPool, model_mse

BRUTE_FORCE_BUDGET = 2_000_000
DEFAULT_ETA_FACTOR = 0.25


@dataclass(frozen=True)
class MinimalClass:
    kappa: int
    eta: float
    models: list
    best_mse: float

    def __len__(self):
        return len(self.models)

    def model_set(self) -> set:
        return {m for m, _ in self.models}


def _select(items, kappa, eta) -> MinimalClass:
    best = items[0][1]
    keep = [(m, e) for m, e in items if e <= best + eta]
    return MinimalClass(kappa, float(eta), keep, float(best))


def assemble_minimal_class(pool: ModelPool, kappa: int, eta: float) -> MinimalClass:
    """Pool models of size ``kappa`` with MSE <= pool minimum + ``eta``."""
    if eta < 0:
        raise InvalidConfig(f"eta must be nonnegative, got {eta}")
    items = pool.of_size(kappa)
    if not items:
        raise EmptySize(f"pool has no (nonsingular) models of size {kappa}")
    return _select(items, kappa, eta)


def top_m(pool: ModelPool, kappa: int, m: int) -> list:
    """The ``m`` lowest-MSE size-``kappa`` models (fewer if the pool is smaller)."""
    if m < 1:
        raise InvalidConfig(f"m must be at least 1, got {m}")
    return pool.of_size(kappa)[:m]


def brute_force_minimal_class(data: Dataset, kappa: int, eta: float,
                              budget: int = BRUTE_FORCE_BUDGET) -> MinimalClass:
    """Exact minimal class by fitting every size-``kappa`` model."""
    total = math.comb(data.p, kappa)
    if total > budget:
        raise BudgetExceeded(f"C({data.p}, {kappa}) = {total} fits exceeds budget {budget}")
    return assemble_minimal_class(exhaustive_pool(data, kappa), kappa, eta)


def exhaustive_pool(data: Dataset, kappa: int) -> ModelPool:
    pool = ModelPool()
    for model in combinations(range(data.p), kappa):
        pool.record(model, model_mse(data, model))
    return pool


@dataclass(frozen=True)
class FrequencyMatrix:
    predictors: list
    counts: np.ndarray
    n_models: int


def frequency_matrix(models: Sequence[Sequence[int]], threshold: float = 0.25) -> FrequencyMatrix:
    """Joint membership counts for predictors present in >= ``threshold`` of the models.

    ``counts[a, b]`` is the number of models containing both predictors; the
    diagonal holds marginal counts.  Predictors are ordered by decreasing
    marginal count, then index.
    """
    models = [tuple(m) for m in models]
    if not models:
        raise InvalidConfig("frequency matrix needs at least one model")
    marginal: dict[int, int] = {}
    for m in models:
        for j in m:
            marginal[j] = marginal.get(j, 0) + 1
    cut = threshold * len(models)
    keep = sorted((j for j, c in marginal.items() if c >= cut), key=lambda j: (-marginal[j], j))
    pos = {j: a for a, j in enumerate(keep)}
    counts = np.zeros((len(keep), len(keep)), dtype=int)
    for m in models:
        present = [pos[j] for j in m if j in pos]
        for a in present:
            for b in present:
                counts[a, b] += 1
    return FrequencyMatrix(keep, counts, len(models))


def best_in_pool(pool: ModelPool) -> tuple[tuple, float]:
    """Lowest-MSE finite model of any size; ties go to the smaller model."""
    best = None
    for m, e in pool.entries.items():
        if math.isfinite(e.mse) and (best is None or (e.mse, len(m), m) < best):
            best = (e.mse, len(m), m)
    if best is None:
        raise EmptySize("pool holds no finite-MSE models")
    return best[2], best[0]


def estimate_noise_variance(data, pool: ModelPool) -> float:
    """``n / (n - k) * best MSE`` over the pool, with ``k`` the best model's size.

    ``data`` may be the Dataset the pool was built from or just its row count.
    """
    n = data if isinstance(data, (int, np.integer)) else data.n
    model, mse = best_in_pool(pool)
    k = len(model)
    if n <= k:
        raise DegenerateFit(f"n={n} is not larger than the best model size {k}")
    return n / (n - k) * mse


def unique_counts(pool: ModelPool) -> dict[int, int]:
    """Number of distinct finite-MSE models per size."""
    out: dict[int, int] = {}
    for m, e in pool.entries.items():
        if math.isfinite(e.mse):
            out[len(m)] = out.get(len(m), 0) + 1
    return dict(sorted(out.items()))


def keep_top(pool: ModelPool, kappas: Sequence[int], m: int) -> ModelPool:
    """Sub-pool holding the ``m`` best models of each size in ``kappas``."""
    out = ModelPool()
    for kappa in kappas:
        for model, _ in top_m(pool, kappa, m):
            out.entries[model] = pool.entries[model]
    return out
