"""Simulated-annealing random walk over fixed-size models.

Each step swaps one predictor out of the current model and one in.  The
predictor to drop is drawn with probability proportional to ``1/gamma`` over
the model, the one to add with probability proportional to ``gamma`` over
the eligible predictors outside it.  The move is accepted with probability
``min(1, q)``, where ``q`` combines the change in least-squares MSE at the
current temperature with the Metropolis-Hastings proposal ratio.

Every model proposed along the way is kept in a :class:`ModelPool`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .core import Dataset, as_model, fit_least_squares
from .errors import InvalidConfig, NoCandidates, SingularGram, ZeroGammaInState
from .scoring import GammaScores

EXPONENT_CLAMP = 700.0
DEFAULT_ITERS = 100


def geometric_temperatures(scale: float = 10.0, ratio: float = 0.7, count: int = 20) -> tuple:
    """``scale * (ratio**1, ..., ratio**count)``."""
    if scale <= 0 or not 0 < ratio < 1 or count < 1:
        raise InvalidConfig(f"bad geometric schedule {scale}:{ratio}:{count}")
    return tuple(scale * ratio ** k for k in range(1, count + 1))


def parse_schedule(text: str) -> tuple:
    """Parse ``"10:0.7:20"`` into a geometric schedule."""
    try:
        scale, ratio, count = text.split(":")
        return geometric_temperatures(float(scale), float(ratio), int(count))
    except ValueError as exc:
        raise InvalidConfig(f"cannot parse temperature schedule {text!r}") from exc


# -- proposal arithmetic -------------------------------------------------------

def _gamma_array(gamma) -> np.ndarray:
    return gamma.gamma if isinstance(gamma, GammaScores) else np.asarray(gamma, dtype=float)


def removal_probs(state: Sequence[int], gamma) -> np.ndarray:
    """Probability of dropping each member of ``state`` (proportional to 1/gamma)."""
    g = _gamma_array(gamma)[list(state)]
    if np.any(g <= 0):
        bad = [int(j) for j, v in zip(state, g) if v <= 0]
        raise ZeroGammaInState(f"predictors {bad} in the current model have zero score")
    inv = 1.0 / g
    return inv / inv.sum()


def addition_probs(state: Sequence[int], gamma) -> tuple[np.ndarray, np.ndarray]:
    """Candidates outside ``state`` with positive score and their probabilities.

    Returns ``(candidates, probs)``; predictors with zero score are never
    candidates.
    """
    g = _gamma_array(gamma)
    mask = g > 0
    mask[list(state)] = False
    cand = np.flatnonzero(mask)
    if cand.size == 0:
        raise NoCandidates("every predictor with a positive score is already in the model")
    w = g[cand]
    return cand, w / w.sum()


@dataclass(frozen=True)
class SwapProposal:
    removed: int
    added: int
    forward_prob: float
    backward_prob: float
    candidate: tuple[int, ...]


def swap_probability(state: Sequence[int], removed: int, added: int, gamma) -> float:
    """Probability that ``state`` proposes dropping ``removed`` and adding ``added``."""
    g = _gamma_array(gamma)
    out = removal_probs(state, g)
    p_out = out[list(state).index(removed)]
    inside = set(state)
    total_in = sum(float(g[u]) for u in np.flatnonzero(g > 0) if u not in inside)
    return float(p_out * g[added] / total_in)


def make_proposal(state: Sequence[int], removed: int, added: int, gamma) -> SwapProposal:
    state = tuple(state)
    candidate = tuple(sorted(set(state) - {removed} | {added}))
    fwd = swap_probability(state, removed, added, gamma)
    bwd = swap_probability(candidate, added, removed, gamma)
    return SwapProposal(int(removed), int(added), fwd, bwd, candidate)


def _draw(probs: np.ndarray, rng: np.random.Generator) -> int:
    cdf = np.cumsum(probs)
    k = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return min(k, probs.size - 1)


def propose(state: Sequence[int], gamma, rng: np.random.Generator) -> SwapProposal:
    state = tuple(state)
    out = removal_probs(state, gamma)
    removed = state[_draw(out, rng)]
    cand, pin = addition_probs(state, gamma)
    added = int(cand[_draw(pin, rng)])
    return make_proposal(state, removed, added, gamma)


def acceptance_ratio(current_mse: float, candidate_mse: float, t: float,
                     proposal: SwapProposal) -> float:
    """``q = exp((mse_cur - mse_cand) / t) * backward / forward``.

    MSEs are RSS/n, so the exponent equals (RSS_cur - RSS_cand)/(n t).  The
    exponent is clamped to +-700; a candidate with infinite MSE gets q = 0.
    """
    if t <= 0:
        raise InvalidConfig(f"temperature must be positive, got {t}")
    if math.isinf(candidate_mse):
        return 0.0
    expo = (current_mse - candidate_mse) / t
    if math.isnan(expo):
        expo = 0.0
    expo = min(max(expo, -EXPONENT_CLAMP), EXPONENT_CLAMP)
    return math.exp(expo) * proposal.backward_prob / proposal.forward_prob


def metropolis_accept(q: float, rng: np.random.Generator) -> bool:
    """Accept with probability ``min(1, q)``; a uniform is drawn only when q < 1."""
    if q >= 1.0:
        return True
    return bool(rng.random() < q)


# -- model pool -----------------------------------------------------------------

@dataclass
class PoolEntry:
    mse: float
    times_seen: int = 1
    first_seen_at: int = 0


class ModelPool:
    """Deduplicated record of evaluated models and their least-squares MSEs."""

    def __init__(self, entries: dict | None = None):
        self.entries: dict[tuple[int, ...], PoolEntry] = dict(entries or {})

    def __len__(self):
        return len(self.entries)

    def __contains__(self, model):
        return tuple(model) in self.entries

    def __iter__(self):
        return iter(self.entries)

    def __eq__(self, other):
        return isinstance(other, ModelPool) and self.entries == other.entries

    def get(self, model) -> PoolEntry | None:
        return self.entries.get(tuple(model))

    def record(self, model: tuple[int, ...], mse: float, step: int = 0) -> None:
        entry = self.entries.get(model)
        if entry is None:
            self.entries[model] = PoolEntry(float(mse), 1, step)
        else:
            entry.times_seen += 1

    def sizes(self) -> list[int]:
        return sorted({len(m) for m in self.entries})

    def of_size(self, kappa: int, finite_only: bool = True) -> list[tuple[tuple[int, ...], float]]:
        """Size-``kappa`` models sorted by MSE, ties broken by index order."""
        items = [(m, e.mse) for m, e in self.entries.items()
                 if len(m) == kappa and (math.isfinite(e.mse) or not finite_only)]
        items.sort(key=lambda me: (me[1], me[0]))
        return items

    def merge(self, other: "ModelPool") -> "ModelPool":
        """Union of two pools: counts add, earliest sighting kept."""
        out = {m: PoolEntry(e.mse, e.times_seen, e.first_seen_at) for m, e in self.entries.items()}
        for m, e in other.entries.items():
            mine = out.get(m)
            if mine is None:
                out[m] = PoolEntry(e.mse, e.times_seen, e.first_seen_at)
            else:
                mine.times_seen += e.times_seen
                mine.first_seen_at = min(mine.first_seen_at, e.first_seen_at)
        return ModelPool(out)

    def sorted_items(self):
        """All entries ordered by size, then MSE, then indices."""
        return sorted(self.entries.items(), key=lambda kv: (len(kv[0]), kv[1].mse, kv[0]))


def merge_pools(pools: Iterable[ModelPool]) -> ModelPool:
    out = ModelPool()
    for pool in pools:
        out = out.merge(pool)
    return out


# -- annealing -------------------------------------------------------------------

@dataclass(frozen=True)
class AnnealingConfig:
    kappa: int
    temperatures: tuple = field(default_factory=geometric_temperatures)
    iters_per_temp: int | tuple = DEFAULT_ITERS
    start: tuple | None = None
    seed: int | None = 0
    record_candidates: bool = True

    def iteration_counts(self) -> list[int]:
        if isinstance(self.iters_per_temp, (int, np.integer)):
            return [int(self.iters_per_temp)] * len(self.temperatures)
        counts = [int(c) for c in self.iters_per_temp]
        if len(counts) != len(self.temperatures):
            raise InvalidConfig("need one iteration count per temperature")
        return counts

    def validate(self, gamma: GammaScores) -> None:
        temps = np.asarray(self.temperatures, dtype=float)
        if temps.size == 0 or np.any(temps <= 0) or np.any(np.diff(temps) >= 0):
            raise InvalidConfig("temperatures must be positive and strictly decreasing")
        if any(c < 0 for c in self.iteration_counts()):
            raise InvalidConfig("iteration counts must be nonnegative")
        eligible = set(gamma.support)
        if self.kappa < 1:
            raise InvalidConfig(f"model size must be at least 1, got {self.kappa}")
        if len(eligible) <= self.kappa:
            raise InvalidConfig(
                f"only {len(eligible)} predictors have positive score; need more than {self.kappa}")
        if self.start is not None:
            start = as_model(self.start, gamma.p)
            if len(start) != self.kappa:
                raise InvalidConfig(f"start model has size {len(start)}, expected {self.kappa}")
            if not set(start) <= eligible:
                raise InvalidConfig("start model uses predictors with zero score")


def sample_start(gamma: GammaScores, kappa: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Draw ``kappa`` eligible predictors without replacement, weights proportional to gamma."""
    eligible = np.asarray(gamma.support)
    w = gamma.gamma[eligible]
    picked = rng.choice(eligible, size=kappa, replace=False, p=w / w.sum())
    return tuple(sorted(int(j) for j in picked))


def model_mse(data: Dataset, model: tuple[int, ...]) -> float:
    """Least-squares MSE of ``model``; infinite when its Gram matrix is singular."""
    try:
        return fit_least_squares(data, model).mse
    except SingularGram:
        return math.inf


def run_annealing(data: Dataset, gamma: GammaScores, config: AnnealingConfig,
                  on_step: Callable | None = None) -> ModelPool:
    """One annealing chain; returns the pool of every model it evaluated.

    The chain's generator is ``numpy.random.default_rng(config.seed)``; when
    ``config.start`` is None the start model is drawn from it first.
    ``on_step(t, state, proposal, candidate_mse, q, accepted)`` is called after
    each iteration if given.
    """
    if gamma.p != data.p:
        raise InvalidConfig(f"scores cover {gamma.p} predictors, data has {data.p}")
    config.validate(gamma)
    rng = np.random.default_rng(config.seed)
    state = (as_model(config.start) if config.start is not None
             else sample_start(gamma, config.kappa, rng))
    pool = ModelPool()
    cur_mse = model_mse(data, state)
    pool.record(state, cur_mse, 0)
    step = 0
    for t, count in zip(config.temperatures, config.iteration_counts()):
        for _ in range(count):
            step += 1
            prop = propose(state, gamma, rng)
            cand = prop.candidate
            entry = pool.get(cand)
            cand_mse = entry.mse if entry is not None else model_mse(data, cand)
            if config.record_candidates:
                pool.record(cand, cand_mse, step)
            q = acceptance_ratio(cur_mse, cand_mse, t, prop)
            accepted = metropolis_accept(q, rng)
            if on_step is not None:
                on_step(t, state, prop, cand_mse, q, accepted)
            if accepted:
                state, cur_mse = cand, cand_mse
                if not config.record_candidates:
                    pool.record(state, cur_mse, step)
    return pool


def chain_seed(seed: int, kappa: int, start_index: int) -> int:
    """Independent per-chain seed derived from (seed, kappa, start index)."""
    ss = np.random.SeedSequence(seed, spawn_key=(int(kappa), int(start_index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_chains(data: Dataset, gamma: GammaScores, kappas: Sequence[int],
               starts_per_kappa: int = 1, template: AnnealingConfig | None = None,
               seed: int = 0) -> list[tuple[tuple[int, int], ModelPool]]:
    """One pool per chain, keyed by ``(kappa, start_index)``.

    Chain ``(kappa, i)`` uses seed ``chain_seed(seed, kappa, i)`` and draws its
    own start model.
    """
    if starts_per_kappa < 1:
        raise InvalidConfig("need at least one start per model size")
    base = template or AnnealingConfig(kappa=1)
    out = []
    for kappa in kappas:
        for i in range(starts_per_kappa):
            cfg = AnnealingConfig(int(kappa), base.temperatures, base.iters_per_temp, None,
                                  chain_seed(seed, kappa, i), base.record_candidates)
            out.append(((int(kappa), i), run_annealing(data, gamma, cfg)))
    return out


def multi_start_search(data: Dataset, gamma: GammaScores, kappas: Sequence[int],
                       starts_per_kappa: int = 1, template: AnnealingConfig | None = None,
                       seed: int = 0) -> ModelPool:
    """Run ``starts_per_kappa`` chains for every size in ``kappas`` and pool them."""
    chains = run_chains(data, gamma, kappas, starts_per_kappa, template, seed)
    return merge_pools(pool for _, pool in chains)
