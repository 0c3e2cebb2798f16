"""Simulation study with four competing target models.

Predictors are iid N(0, 1) except columns 7 and 8 (1-based), built as

    x7 = 2/3 (x1 + x2) + xi1,   x8 = 2/3 (x3 + x4) + xi2,   xi ~ N(0, 1/3),

and ``y = C (x1 + ... + x6) + eps`` with ``eps ~ N(0, 1)``.  The four models
of interest (0-based here) are (I) {0..5}, (II) {4,5,6,7}, (III)
{2,3,4,5,6} and (IV) {0,1,4,5,7}.

Replicate ``r`` draws its data from ``SeedSequence(seed, spawn_key=(r,))``
and nothing else, so cells that differ only in SNR share the same design
and noise (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import RawTable, standardize
from .errors import EmptySupports, InvalidConfig, MissingSize
from .minclass import top_m
from .scoring import default_delta_grid, score_predictors
from .search import AnnealingConfig, ModelPool, geometric_temperatures, multi_start_search
from .solver import DEFAULT_ALPHA

TARGETS = {
    "I": (0, 1, 2, 3, 4, 5),
    "II": (4, 5, 6, 7),
    "III": (2, 3, 4, 5, 6),
    "IV": (0, 1, 4, 5, 7),
}
TARGET_ORDER = ("I", "II", "III", "IV")
N_SIGNAL = 6


@dataclass(frozen=True)
class ScenarioConfig:
    n: int = 100
    p: int = 200
    snr: float = 2.0
    replicates: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.p <= 8:
            raise InvalidConfig(f"p must exceed 8, got {self.p}")
        if not self.snr > 0:
            raise InvalidConfig(f"snr must be positive, got {self.snr}")
        if self.n < 10:
            raise InvalidConfig(f"n too small: {self.n}")


def snr_to_coefficient(snr: float) -> float:
    """Common signal coefficient C giving Var(x^T beta) / sigma^2 = snr.

    Six independent unit-variance signal columns with sigma^2 = 1 give
    Var(x^T beta) = 6 C^2.
    """
    if not snr > 0:
        raise InvalidConfig(f"snr must be positive, got {snr}")
    return math.sqrt(snr / N_SIGNAL)


@dataclass(frozen=True)
class Truth:
    beta: np.ndarray
    coefficient: float
    targets: dict = field(default_factory=lambda: dict(TARGETS))


def generate_scenario(cfg: ScenarioConfig, replicate_index: int) -> tuple[RawTable, Truth]:
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(int(replicate_index),)))
    n, p = cfg.n, cfg.p
    x = rng.standard_normal((n, p))
    xi = rng.normal(0.0, math.sqrt(1.0 / 3.0), size=(n, 2))
    eps = rng.standard_normal(n)
    x[:, 6] = 2.0 / 3.0 * (x[:, 0] + x[:, 1]) + xi[:, 0]
    x[:, 7] = 2.0 / 3.0 * (x[:, 2] + x[:, 3]) + xi[:, 1]
    c = snr_to_coefficient(cfg.snr)
    beta = np.zeros(p)
    beta[:N_SIGNAL] = c
    y = x @ beta + eps
    names = [f"X{j + 1}" for j in range(p)]
    return RawTable(x, names, y, "Y"), Truth(beta, c)


def evaluate_recovery(pool: ModelPool, targets: dict | None = None, m: int = 5) -> dict:
    """Per target: (is rank-1 among pool models of its size, is within the top ``m``)."""
    targets = TARGETS if targets is None else targets
    sizes = set(pool.sizes())
    out = {}
    for name, model in targets.items():
        k = len(model)
        if k not in sizes:
            raise MissingSize(f"pool has no models of size {k} (target {name})")
        ranked = [mm for mm, _ in top_m(pool, k, m)]
        model = tuple(sorted(model))
        out[name] = (bool(ranked and ranked[0] == model), model in ranked)
    return out


# -- study ------------------------------------------------------------------------

@dataclass(frozen=True)
class StudyOptions:
    alpha: float = DEFAULT_ALPHA
    folds: int = 10
    delta_step: float = 0.02
    temperatures: tuple = field(default_factory=geometric_temperatures)
    iters: int = 100
    starts: int = 1
    kappas: tuple = (4, 5, 6)
    top: int = 5


def replicate_seeds(seed: int, replicate_index: int) -> tuple[int, int]:
    """(cross-validation seed, search seed) for one replicate."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(replicate_index), 1))
    a, b = ss.generate_state(2, dtype=np.uint64)
    return int(a), int(b)


def score_replicate(cfg: ScenarioConfig, r: int, options: StudyOptions):
    """Generate, standardize and score replicate ``r``; returns (data, truth, scores)."""
    raw, truth = generate_scenario(cfg, r)
    data = standardize(raw)
    cv_seed, _ = replicate_seeds(cfg.seed, r)
    report = score_predictors(data, options.alpha, options.folds,
                              default_delta_grid(options.delta_step), cv_seed)
    return data, truth, report.gamma


def search_replicate(data, gamma, options: StudyOptions, seed: int) -> ModelPool:
    """Multi-start search over the sizes that the score support can accommodate."""
    eligible = len(gamma.support)
    kappas = [k for k in options.kappas if k < eligible]
    template = AnnealingConfig(kappa=1, temperatures=tuple(options.temperatures),
                               iters_per_temp=options.iters)
    if not kappas:
        return ModelPool()
    return multi_start_search(data, gamma, kappas, options.starts, template, seed)


def recovery_or_miss(pool: ModelPool, m: int) -> dict:
    out = {}
    sizes = set(pool.sizes())
    for name, model in TARGETS.items():
        if len(model) in sizes:
            out.update(evaluate_recovery(pool, {name: model}, m))
        else:
            out[name] = (False, False)
    return out


def run_replicate(cfg: ScenarioConfig, r: int, options: StudyOptions) -> dict:
    """Outcomes ``{target: (is_best, in_top)}`` for one replicate."""
    try:
        data, _, gamma = score_replicate(cfg, r, options)
    except EmptySupports:
        return {name: (False, False) for name in TARGETS}
    _, search_seed = replicate_seeds(cfg.seed, r)
    pool = search_replicate(data, gamma, options, search_seed)
    return recovery_or_miss(pool, options.top)


def _run_cell_chunk(args):
    cfg, indices, options = args
    return [run_replicate(cfg, r, options) for r in indices]


@dataclass
class RecoveryTable:
    """Recovery proportions per (p, snr, target) with binomial standard errors."""
    rows: list = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)

    def add_cell(self, cfg: ScenarioConfig, results: Sequence[dict]) -> None:
        self.outcomes[(cfg.p, cfg.snr)] = list(results)
        reps = len(results)
        for name in TARGET_ORDER:
            best = np.array([res[name][0] for res in results], dtype=float)
            top = np.array([res[name][1] for res in results], dtype=float)
            pb, pt = best.mean(), top.mean()
            self.rows.append({
                "p": cfg.p, "snr": cfg.snr, "model": name, "replicates": reps,
                "prop_best": float(pb), "prop_top5": float(pt),
                "se_best": float(math.sqrt(pb * (1 - pb) / reps)),
                "se_top5": float(math.sqrt(pt * (1 - pt) / reps)),
            })

    def cell(self, p: int, snr: float, model: str) -> dict:
        for row in self.rows:
            if row["p"] == p and row["snr"] == snr and row["model"] == model:
                return row
        raise KeyError((p, snr, model))

    def csv_rows(self):
        header = ["p", "snr", "model", "replicates", "prop_best", "prop_top5", "se_best", "se_top5"]
        return header, [[row[h] for h in header] for row in self.rows]

    def render(self) -> str:
        """Plain-text layout: one block per SNR, one column pair per p."""
        ps = sorted({row["p"] for row in self.rows})
        snrs = sorted({row["snr"] for row in self.rows})
        head = f"{'SNR':>5} {'Model':>6} " + " ".join(f"{'p=' + str(p):^13}" for p in ps)
        sub = f"{'':>5} {'':>6} " + " ".join(f"{'Best':>6} {'Top5':>6}" for _ in ps)
        lines = [head, sub, "-" * len(sub)]
        for snr in snrs:
            for i, name in enumerate(TARGET_ORDER):
                label = f"{snr:g}" if i == 0 else ""
                cells = []
                for p in ps:
                    try:
                        row = self.cell(p, snr, name)
                        cells.append(f"{row['prop_best']:6.2f} {row['prop_top5']:6.2f}")
                    except KeyError:
                        cells.append(f"{'-':>6} {'-':>6}")
                lines.append(f"{label:>5} {'(' + name + ')':>6} " + " ".join(cells))
            lines.append("-" * len(sub))
        return "\n".join(lines)


def run_study(cells: Sequence[ScenarioConfig], options: StudyOptions | None = None,
              workers: int = 1) -> RecoveryTable:
    """Run every replicate of every cell and tabulate recovery proportions.

    Replicates are split into chunks and farmed out to ``workers`` processes
    when ``workers > 1``; results do not depend on the worker count.
    """
    options = options or StudyOptions()
    table = RecoveryTable()
    for cfg in cells:
        indices = list(range(cfg.replicates))
        if workers > 1:
            chunks = [indices[i::workers] for i in range(workers)]
            with ProcessPoolExecutor(workers) as ex:
                parts = list(ex.map(_run_cell_chunk, [(cfg, ch, options) for ch in chunks]))
            results: list = [None] * len(indices)
            for ch, part in zip(chunks, parts):
                for r, res in zip(ch, part):
                    results[r] = res
        else:
            results = [run_replicate(cfg, r, options) for r in indices]
        table.add_cell(cfg, results)
    return table


def study_grid(ps: Sequence[int], snrs: Sequence[float], replicates: int, seed: int,
               n: int = 100) -> list[ScenarioConfig]:
    return [ScenarioConfig(n, p, snr, replicates, seed) for p in ps for snr in snrs]

