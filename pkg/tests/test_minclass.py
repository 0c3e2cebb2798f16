import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from minimal_class.errors import BudgetExceeded, DegenerateFit, EmptySize, InvalidConfig
from minimal_class.minclass import (assemble_minimal_class, best_in_pool,
                                    brute_force_minimal_class, estimate_noise_variance,
                                    exhaustive_pool, frequency_matrix, keep_top, top_m,
                                    unique_counts)
from minimal_class.search import ModelPool, model_mse

from conftest import make_data, spanned_data


def hand_pool():
    pool = ModelPool()
    for model, mse in [((0, 1), 1.0), ((0, 2), 1.0), ((1, 2), 1.04), ((2, 3), 1.3),
                       ((1, 3), math.inf), ((0, 1, 2), 0.7)]:
        pool.record(model, mse)
    return pool


def test_eta_zero_keeps_ties_only():
    mc = assemble_minimal_class(hand_pool(), 2, 0.0)
    assert mc.models == [((0, 1), 1.0), ((0, 2), 1.0)]
    assert mc.best_mse == 1.0 and mc.kappa == 2


def test_eta_infinite_keeps_all_finite():
    mc = assemble_minimal_class(hand_pool(), 2, math.inf)
    assert [m for m, _ in mc.models] == [(0, 1), (0, 2), (1, 2), (2, 3)]


def test_assemble_errors():
    with pytest.raises(EmptySize):
        assemble_minimal_class(hand_pool(), 4, 0.1)
    with pytest.raises(InvalidConfig):
        assemble_minimal_class(hand_pool(), 2, -0.1)


@settings(max_examples=50)
@given(st.lists(st.floats(0.0, 5.0), min_size=1, max_size=30), st.floats(0, 3), st.floats(0, 3))
def test_eta_monotone(mses, e1, e2):
    pool = ModelPool()
    for model, mse in zip(combinations(range(10), 3), mses):
        pool.record(model, mse)
    lo, hi = sorted((e1, e2))
    small = assemble_minimal_class(pool, 3, lo)
    big = assemble_minimal_class(pool, 3, hi)
    assert small.model_set() <= big.model_set()
    assert all(mse <= small.best_mse + lo for _, mse in small.models)
    assert small.best_mse == min(mses)


def test_top_m():
    pool = hand_pool()
    assert top_m(pool, 2, 1) == [((0, 1), 1.0)]
    assert [m for m, _ in top_m(pool, 2, 10)] == [(0, 1), (0, 2), (1, 2), (2, 3)]
    with pytest.raises(InvalidConfig):
        top_m(pool, 2, 0)


def test_keep_top():
    kept = keep_top(hand_pool(), [2, 3], 2)
    assert set(kept) == {(0, 1), (0, 2), (0, 1, 2)}


def test_assemble_exhaustive_matches_brute_force(rng):
    d = make_data(40, 10, rng, beta=[1.0, 0.5])
    exact = brute_force_minimal_class(d, 2, 0.05)
    mc = assemble_minimal_class(exhaustive_pool(d, 2), 2, 0.05)
    assert mc == exact
    # independent enumeration
    fits = sorted((model_mse(d, m), m) for m in combinations(range(10), 2))
    want = [(m, e) for e, m in fits if e <= fits[0][0] + 0.05]
    assert [m for m, _ in mc.models] == [m for m, _ in want]
    np.testing.assert_allclose([e for _, e in mc.models], [e for e, _ in fits[:len(want)]],
                               atol=1e-12)


@pytest.mark.parametrize("p", [4, 8, 12])
@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_assemble_exhaustive_grid(p, kappa):
    d = make_data(30, p, np.random.default_rng(p * 10 + kappa), beta=[0.8])
    full = exhaustive_pool(d, kappa)
    assert len(full) == math.comb(p, kappa)
    for eta in (0.0, 0.02, 0.5):
        assert assemble_minimal_class(full, kappa, eta) == brute_force_minimal_class(d, kappa, eta)


def test_brute_force_budget(rng):
    d = make_data(30, 12, rng)
    with pytest.raises(BudgetExceeded):
        brute_force_minimal_class(d, 3, 0.1, budget=100)


def test_brute_force_single_model(rng):
    d = make_data(30, 4, rng)
    mc = brute_force_minimal_class(d, 4, 1.0)
    assert [m for m, _ in mc.models] == [(0, 1, 2, 3)]


def test_brute_force_exact_fit(rng):
    d = spanned_data(30, 10, (3, 7), rng)
    mc = brute_force_minimal_class(d, 2, 0.0)
    assert mc.models[0][0] == (3, 7)
    assert mc.best_mse == pytest.approx(0.0, abs=1e-20)


def test_frequency_single_model():
    f = frequency_matrix([(2, 5)])
    assert f.predictors == [2, 5]
    np.testing.assert_array_equal(f.counts, np.ones((2, 2)))


def test_frequency_disjoint_models():
    f = frequency_matrix([(0, 1), (2, 3)], threshold=0.5)
    assert f.counts[0, 2] == 0 and f.counts[1, 3] == 0
    assert np.all(np.diag(f.counts) == 1)


def test_frequency_threshold_and_order():
    models = [(0, 1), (0, 2), (0, 3), (1, 2)]
    f = frequency_matrix(models, threshold=0.5)
    assert f.predictors == [0, 1, 2]
    np.testing.assert_array_equal(f.counts, [[3, 1, 1], [1, 2, 1], [1, 1, 2]])
    with pytest.raises(InvalidConfig):
        frequency_matrix([])


@settings(max_examples=100)
@given(st.lists(st.sets(st.integers(0, 15), min_size=1, max_size=6), min_size=1, max_size=25),
       st.floats(0.0, 1.0))
def test_frequency_invariants(models, threshold):
    models = [tuple(sorted(m)) for m in models]
    f = frequency_matrix(models, threshold)
    c = f.counts
    np.testing.assert_array_equal(c, c.T)
    assert np.all(np.diag(c)[:, None] >= c)
    for a, j in enumerate(f.predictors):
        assert c[a, a] == sum(j in m for m in models) >= threshold * len(models)
        for b, k in enumerate(f.predictors):
            assert c[a, b] == sum(j in m and k in m for m in models)


def test_noise_variance_exact_fit(rng):
    d = spanned_data(30, 10, (3, 7), rng)
    pool = exhaustive_pool(d, 2)
    assert estimate_noise_variance(d, pool) == pytest.approx(0.0, abs=1e-20)


def test_noise_variance_formula():
    pool = hand_pool()
    assert best_in_pool(pool) == ((0, 1, 2), 0.7)
    assert estimate_noise_variance(10, pool) == pytest.approx(10 / 7 * 0.7)
    with pytest.raises(DegenerateFit):
        estimate_noise_variance(3, pool)
    with pytest.raises(EmptySize):
        best_in_pool(ModelPool())


def test_noise_variance_large_model_inflated(rng):
    # a size n-2 model with a poor fit has its MSE inflated n/2 times
    pool = ModelPool()
    pool.record(tuple(range(28)), 0.05)
    assert estimate_noise_variance(30, pool) == pytest.approx(0.75)


def test_unique_counts():
    assert unique_counts(hand_pool()) == {2: 4, 3: 1}
