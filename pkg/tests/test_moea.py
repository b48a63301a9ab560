import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smemnas.evaluation import SyntheticOracle
from smemnas.metrics import hypervolume_2d
from smemnas.moea import (
    MoeaConfig,
    crowding_distance,
    dominates,
    fast_nondominated_sort,
    int_polynomial_mutation,
    mp_moea,
    select_parents,
    split_populations,
    threshold,
    two_point_crossover,
)
from smemnas.search import sample_unique
from smemnas.search_space import DEFAULT_SPACE, canonicalize
from smemnas.surrogate import OracleComparator


def peel_fronts(P):
    """Quadratic reference: repeatedly strip the non-dominated remainder."""
    left = list(range(len(P)))
    fronts = []
    while left:
        f = [i for i in left if not any(dominates(P[j], P[i]) for j in left if j != i)]
        fronts.append(sorted(f))
        left = [i for i in left if i not in f]
    return fronts


def test_sort_example():
    P = [(1, 5), (2, 3), (3, 4), (4, 1), (5, 5)]
    assert fast_nondominated_sort(P) == [[0, 1, 3], [2], [4]]


def test_sort_duplicates_share_front():
    assert fast_nondominated_sort([(1, 1), (1, 1), (2, 2)]) == [[0, 1], [2]]


def test_sort_empty():
    assert fast_nondominated_sort(np.zeros((0, 2))) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 200), st.integers(0, 2**31), st.integers(2, 20))
def test_sort_matches_peeling(n, seed, levels):
    # few distinct levels forces plenty of ties and weak dominance
    P = np.random.default_rng(seed).integers(0, levels, size=(n, 2)).astype(float)
    assert fast_nondominated_sort(P) == peel_fronts(P.tolist())


def test_crowding_example():
    d = crowding_distance([(0, 2), (1, 1), (2, 0)])
    assert math.isinf(d[0]) and math.isinf(d[2])
    assert d[1] == pytest.approx(2.0)


@pytest.mark.parametrize("P", [[(0, 0)], [(0, 1), (1, 0)]])
def test_crowding_small_is_infinite(P):
    assert np.all(np.isinf(crowding_distance(P)))


def test_crowding_degenerate_objective():
    d = crowding_distance([(0, 3), (0, 2), (0, 1)])
    assert np.isinf(d[0]) and np.isinf(d[2]) and np.isfinite(d[1])


def test_split_populations():
    P = [(0, 4), (4, 0), (1, 5), (4, 4), (5, 1), (6, 6)]
    E, F = split_populations(P, K_vice=2)
    assert E == [0, 1]
    assert len(F) == 2 and set(F) <= {2, 3, 4, 5}
    # front-1 boundary points are infinitely crowded and come first
    assert F == [2, 4]


def test_split_single_front():
    E, F = split_populations([(0, 1), (1, 0)], K_vice=5)
    assert E == [0, 1] and F == []


@pytest.mark.parametrize(
    "g,G,delta,lo,hi",
    [(0, 20, 0.2, 0.2, 0.7), (0, 20, 0.9, 0.7, 0.9), (5, 20, 0.3, 0.0, 0.3), (15, 20, 0.3, 0.0, 0.3), (16, 20, 0.4, 0.4, 1.0)],
)
def test_threshold_branches(g, G, delta, lo, hi):
    rng = np.random.default_rng(0)
    draws = np.array([threshold(g, G, delta, rng) for _ in range(2000)])
    assert draws.min() >= lo and draws.max() <= hi
    assert abs(draws.mean() - (lo + hi) / 2) < 3 * (hi - lo) / math.sqrt(12 * len(draws)) + 1e-12


@pytest.mark.parametrize("thr,both_main", [(0.2, True), (0.8, False)])
def test_select_parents_membership(thr, both_main):
    rng = np.random.default_rng(1)
    E, F = [0, 1, 2], [10, 11]
    for _ in range(2000):
        a, b = select_parents(E, F, 0.5, thr, rng)
        assert a in E
        assert (b in E) if both_main else (b in F)
        if both_main:
            assert a != b


def test_select_parents_inverted_and_single_pop():
    rng = np.random.default_rng(2)
    E, F = [0, 1], [5]
    assert select_parents(E, F, 0.5, 0.8, rng, invert=True)[1] in E
    assert select_parents(E, F, 0.5, 0.2, rng, invert=True)[1] in F
    for _ in range(200):
        assert select_parents(E, F, 0.5, 0.9, rng, multipop=False)[1] in E
    # empty vice population falls back to the main population
    assert select_parents(E, [], 0.5, 0.9, rng)[1] in E
    assert select_parents([3], [], 0.5, 0.1, rng) == (3, 3)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_crossover_preserves_genes(seed):
    rng = np.random.default_rng(seed)
    p1 = rng.integers(0, 5, 46)
    p2 = rng.integers(0, 5, 46)
    c1, c2 = two_point_crossover(p1, p2, 1.0, rng)
    # each position is swapped or kept as a pair
    assert np.all(((c1 == p1) & (c2 == p2)) | ((c1 == p2) & (c2 == p1)))
    swapped = np.flatnonzero((c1 != p1) | (c2 != p2))
    if swapped.size:
        assert np.all(np.diff(swapped) >= 1)
        # swapped genes sit inside one contiguous segment
        seg = np.arange(swapped.min(), swapped.max() + 1)
        assert np.all((c1[seg] == p2[seg]) & (c2[seg] == p1[seg]))


def test_crossover_probability_zero():
    rng = np.random.default_rng(0)
    c1, c2 = two_point_crossover(np.zeros(46), np.ones(46), 0.0, rng)
    assert c1.sum() == 0 and c2.sum() == 46


def test_mutation_prob_zero_and_fixed_gene():
    rng = np.random.default_rng(0)
    x = np.full(46, 1)
    assert np.array_equal(int_polynomial_mutation(x, DEFAULT_SPACE.upper_bounds, 0.0, 20, rng), x)
    upper = np.zeros(46, dtype=int)
    assert np.array_equal(int_polynomial_mutation(np.zeros(46), upper, 1.0, 20, rng), np.zeros(46))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_mutation_stays_in_bounds_and_changes(seed):
    rng = np.random.default_rng(seed)
    upper = np.asarray(DEFAULT_SPACE.upper_bounds)
    x = rng.integers(0, upper + 1)
    y = int_polynomial_mutation(x, upper, 1.0, 20, rng)
    assert np.all((y >= 0) & (y <= upper))
    assert np.all(y != x)


def test_mutation_rate_binomial():
    rng = np.random.default_rng(3)
    upper = np.asarray(DEFAULT_SPACE.upper_bounds)
    x = np.zeros(46, dtype=int)
    trials = 10_000
    changed = sum(int((int_polynomial_mutation(x, upper, 1 / 46, 20, rng) != x).sum()) for _ in range(trials))
    mean, sd = trials * 1.0, math.sqrt(trials * 46 * (1 / 46) * (45 / 46))
    assert abs(changed - mean) < 4 * sd


@pytest.fixture(scope="module")
def oracle_setup():
    oracle = SyntheticOracle()
    rng = np.random.default_rng(0)
    P0 = sample_unique(rng, 30, DEFAULT_SPACE)
    return OracleComparator(oracle.evaluate), P0


def test_mp_moea_zero_generations(oracle_setup):
    model, P0 = oracle_setup
    pop = mp_moea(P0, model, MoeaConfig(G=0, m=10), np.random.default_rng(0))
    assert pop.genotypes() == list(P0)
    assert sorted(pop.scores.tolist()) == list(range(30))


@pytest.mark.parametrize("cfg", [MoeaConfig(G=5, m=20, K_vice=5), MoeaConfig(G=3, m=40, multipop=False)])
def test_mp_moea_unique_and_capped(oracle_setup, cfg):
    model, P0 = oracle_setup
    gens = []
    pop = mp_moea(P0, model, cfg, np.random.default_rng(1), on_generation=lambda g, p, E: gens.append(g))
    assert gens == list(range(cfg.G + 1))
    assert len(pop) <= len(P0) + cfg.m * cfg.G
    keys = {canonicalize(g) for g in pop.genotypes()}
    assert len(keys) == len(pop)
    assert pop.scores.sum() == len(pop) * (len(pop) - 1) // 2


def test_mp_moea_deterministic(oracle_setup):
    model, P0 = oracle_setup
    cfg = MoeaConfig(G=4, m=20, K_vice=5)
    a = mp_moea(P0, model, cfg, np.random.default_rng(7))
    b = mp_moea(P0, model, cfg, np.random.default_rng(7))
    assert np.array_equal(a.genes, b.genes) and np.array_equal(a.scores, b.scores)


def test_mp_moea_true_front_improves(oracle_setup):
    model, P0 = oracle_setup
    oracle = SyntheticOracle()
    hvs = []

    def track(g, pop, E):
        pts = [(1 - oracle.evaluate(x), pop.madds[i] / 600.0) for i, x in enumerate(pop.genotypes())]
        hvs.append(hypervolume_2d(pts, (1.0, 1.05)))

    mp_moea(P0, model, MoeaConfig(G=6, m=30, K_vice=5), np.random.default_rng(0), on_generation=track)
    # the population only grows, so its true hypervolume cannot drop
    assert all(b >= a - 1e-12 for a, b in zip(hvs, hvs[1:]))
    assert hvs[-1] > hvs[0]


def test_mp_moea_rejects_duplicates(oracle_setup):
    model, P0 = oracle_setup
    with pytest.raises(ValueError, match="duplicates"):
        mp_moea([P0[0], P0[0]], model, MoeaConfig(G=1, m=2), np.random.default_rng(0))


@pytest.mark.parametrize("kw", [{"G": -1}, {"m": 3}, {"K_vice": 0}, {"theta": 1.5}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        MoeaConfig(**kw)
