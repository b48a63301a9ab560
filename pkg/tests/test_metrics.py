import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from smemnas.metrics import hypervolume_2d, kendall_tau, spearman_rho


def tau_by_enumeration(a, b):
    pairs = list(itertools.combinations(range(len(a)), 2))
    s = sum(np.sign(a[i] - a[j]) * np.sign(b[i] - b[j]) for i, j in pairs)
    return s / len(pairs)


def hv_monte_carlo(points, ref, n, rng):
    P = np.asarray(points)
    lo = P.min(axis=0)
    box = np.prod(np.asarray(ref) - lo)
    u = lo + rng.random((n, 2)) * (np.asarray(ref) - lo)
    covered = np.zeros(n, dtype=bool)
    for p in P:
        covered |= (u[:, 0] >= p[0]) & (u[:, 1] >= p[1])
    return box * covered.mean()


def test_kendall_examples():
    assert kendall_tau([1, 2, 3, 4], [1, 2, 3, 4]) == 1.0
    assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0
    assert kendall_tau([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(4 / 6)


def test_spearman_examples():
    assert spearman_rho([1, 2, 3, 4], [1, 2, 3, 4]) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman_rho([1, 2, 3, 4], [1, 2, 4, 3]) == pytest.approx(0.8)


def test_length_mismatch():
    with pytest.raises(ValueError, match="length"):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(ValueError, match="length"):
        spearman_rho([1, 2], [1, 2, 3])


@given(st.permutations(range(8)))
def test_tau_matches_enumeration_without_ties(perm):
    a = np.arange(8)
    assert kendall_tau(a, perm) == pytest.approx(tau_by_enumeration(a, np.array(perm)))


@settings(max_examples=50)
@given(st.lists(st.integers(0, 4), min_size=3, max_size=20), st.data())
def test_tau_b_and_rho_match_scipy_with_ties(a, data):
    b = data.draw(st.lists(st.integers(0, 4), min_size=len(a), max_size=len(a)))
    if len(set(a)) < 2 or len(set(b)) < 2:
        return
    assert kendall_tau(a, b) == pytest.approx(stats.kendalltau(a, b).statistic)
    assert spearman_rho(a, b) == pytest.approx(stats.spearmanr(a, b).statistic)


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=15, unique=True), st.data())
def test_symmetry_and_relabeling(a, data):
    b = data.draw(st.lists(st.floats(-5, 5), min_size=len(a), max_size=len(a), unique=True))
    perm = data.draw(st.permutations(range(len(a))))
    a, b = np.array(a), np.array(b)
    assert kendall_tau(a, b) == pytest.approx(kendall_tau(b, a))
    assert spearman_rho(a, b) == pytest.approx(spearman_rho(b, a))
    assert kendall_tau(a[perm], b[perm]) == pytest.approx(kendall_tau(a, b))
    assert spearman_rho(a[perm], b[perm]) == pytest.approx(spearman_rho(a, b))


def test_hv_examples():
    assert hypervolume_2d([(1, 1)], (2, 2)) == 1.0
    assert hypervolume_2d([(1, 2), (2, 1)], (3, 3)) == 3.0
    assert hypervolume_2d([(1, 2), (2, 1), (2.5, 2.5)], (3, 3)) == 3.0
    assert hypervolume_2d([], (1, 1)) == 0.0
    assert hypervolume_2d([(1, 3), (3, 1)], (3, 3)) == 0.0  # on the reference boundary


points = st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=1, max_size=12)


@given(points, st.tuples(st.floats(0, 1), st.floats(0, 1)))
def test_hv_monotone(P, extra):
    ref = (1.1, 1.1)
    base = hypervolume_2d(P, ref)
    assert hypervolume_2d(P + [extra], ref) >= base - 1e-12
    dominated = [(p[0] + 1e-3, p[1] + 1e-3) for p in P]
    assert hypervolume_2d(P + dominated, ref) == pytest.approx(base)


def test_hv_against_monte_carlo():
    rng = np.random.default_rng(0)
    for _ in range(5):
        P = rng.random((rng.integers(1, 15), 2))
        ref = (1.05, 1.05)
        mc = hv_monte_carlo(P, ref, 200_000, rng)
        assert hypervolume_2d(P, ref) == pytest.approx(mc, rel=2e-2)
