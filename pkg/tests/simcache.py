"""Session-wide cache of simulated replicates shared by the simulation tests.

Scoring a p=200 replicate takes a few seconds, so every test that looks at the
study cells reuses the same scored data and single-start pools.
"""

from functools import lru_cache

from minimal_class.errors import EmptySupports
from minimal_class.minclass import estimate_noise_variance
from minimal_class.search import ModelPool
from minimal_class.simulation import (TARGETS, RecoveryTable, ScenarioConfig, StudyOptions,
                                      recovery_or_miss, replicate_seeds, score_replicate,
                                      search_replicate)

SEED = 11
REPLICATES = 200
OPTIONS = StudyOptions()


def cell(p, snr, replicates=REPLICATES):
    return ScenarioConfig(n=100, p=p, snr=snr, replicates=replicates, seed=SEED)


@lru_cache(maxsize=None)
def scored(p, snr, r):
    """(data, gamma) for replicate ``r``, or None when a score support is empty."""
    try:
        data, _, gamma = score_replicate(cell(p, snr), r, OPTIONS)
    except EmptySupports:
        return None
    return data, gamma


def searched(p, snr, r, starts=1) -> ModelPool:
    found = scored(p, snr, r)
    if found is None:
        return ModelPool()
    data, gamma = found
    opts = OPTIONS if starts == 1 else StudyOptions(starts=starts)
    return search_replicate(data, gamma, opts, replicate_seeds(SEED, r)[1])


@lru_cache(maxsize=None)
def pool(p, snr, r) -> ModelPool:
    return searched(p, snr, r)


def outcomes(p, snr, replicates=REPLICATES):
    return [recovery_or_miss(pool(p, snr, r), OPTIONS.top) for r in range(replicates)]


def table(p, snr, replicates=REPLICATES) -> RecoveryTable:
    t = RecoveryTable()
    t.add_cell(cell(p, snr, replicates), outcomes(p, snr, replicates))
    return t


def noise_variance(p, snr, r):
    found = scored(p, snr, r)
    return estimate_noise_variance(found[0], pool(p, snr, r)) if found else None


__all__ = ["SEED", "REPLICATES", "OPTIONS", "TARGETS", "cell", "scored", "searched", "pool",
           "outcomes", "table", "noise_variance"]
