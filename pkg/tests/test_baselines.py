import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.cluster import KMeans

from kbmom.baselines import (
    BaselineParams, fit_restarts, init_kmpp, init_random, kmeans_fit, kmedians_fit,
    seeding_weights, trimmed_kmeans_fit,
)
from kbmom.data import CentroidSet
from kbmom.exceptions import InfeasibleError, InvalidPlanError


def _blobs(seed, n=120, K=3, p=2):
    g = np.random.default_rng(seed)
    centers = g.uniform(-10, 10, size=(K, p))
    return centers[g.integers(0, K, n)] + g.standard_normal((n, p))


def test_params_validation():
    with pytest.raises(InvalidPlanError):
        BaselineParams(K=0)
    with pytest.raises(InvalidPlanError):
        BaselineParams(K=2, trim_alpha=1.0)
    with pytest.raises(InvalidPlanError):
        BaselineParams(K=2, n_init=0)


def test_init_random():
    X = np.arange(12.0).reshape(6, 2)
    c = init_random(X, 6, 0).centers
    assert sorted(map(tuple, c)) == sorted(map(tuple, X))
    assert np.array_equal(init_random(X, 3, 9).centers, init_random(X, 3, 9).centers)
    with pytest.raises(InfeasibleError):
        init_random(X, 7, 0)


def test_init_random_uniform():
    X = np.arange(5.0)[:, None]
    hits = np.zeros(5)
    for s in range(20000):
        hits[int(init_random(X, 1, s).centers[0, 0])] += 1
    freq = hits / hits.sum()
    se = math.sqrt(0.2 * 0.8 / hits.sum())
    assert np.all(np.abs(freq - 0.2) < 4 * se)


def test_seeding_weights():
    X = np.array([0.0, 3.0, 4.0])
    assert seeding_weights(X, [[0.0]], 2)[2] == pytest.approx(16 / 25)
    assert seeding_weights(X, [[0.0]], 1)[2] == pytest.approx(4 / 7)


def test_plain_kmpp_second_pick_frequency():
    # with one trial per step, the second center follows D^2 weights
    X = np.array([0.0, 3.0, 4.0])[:, None]
    picks = {0.0: 0, 3.0: 0, 4.0: 0}
    first_zero = 0
    for s in range(6000):
        c = init_kmpp(X, 2, s, 2, trials=1).centers[:, 0]
        if c[0] == 0.0:
            first_zero += 1
            picks[c[1]] += 1
    p = picks[4.0] / first_zero
    se = math.sqrt(0.64 * 0.36 / first_zero)
    assert abs(p - 0.64) < 4 * se and picks[0.0] == 0


def test_kmpp_single_center_and_distinct():
    X = _blobs(0)
    c = init_kmpp(X, 1, 3).centers
    assert any(np.array_equal(c[0], x) for x in X)
    c = init_kmpp(X, 3, 3).centers
    assert len({tuple(r) for r in c}) == 3


def test_kmeans_hand_case():
    X = np.array([0.0, 2.0, 10.0, 12.0])[:, None]
    r = kmeans_fit(X, BaselineParams(K=2), CentroidSet([[1.0], [11.0]]))
    assert r.centers.ravel().tolist() == [1.0, 11.0]
    assert r.risk_trace[-1] == 4.0


def test_kmeans_exact_init_converges():
    X = np.repeat(np.array([[0.0, 0.0], [5.0, 1.0], [2.0, 9.0]]), 4, axis=0)
    r = kmeans_fit(X, BaselineParams(K=3), CentroidSet(X[::4]))
    assert r.iterations == 1 and r.converged and r.risk_trace == [0.0]


@pytest.mark.parametrize("seed", range(5))
def test_kmeans_matches_sklearn(seed):
    X = _blobs(seed)
    init = init_kmpp(X, 3, seed)
    r = kmeans_fit(X, BaselineParams(K=3, tol=0.0), init)
    km = KMeans(3, init=init.centers, n_init=1, algorithm="lloyd", tol=0.0, max_iter=300).fit(X)
    assert np.allclose(r.centers, km.cluster_centers_, atol=1e-10)
    assert np.array_equal(r.labels, km.labels_)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_lloyd_distortion_monotone(seed, K):
    X = _blobs(seed, n=60, K=4)
    r = kmeans_fit(X, BaselineParams(K=K, tol=0.0, max_iter=100), init_random(X, K, seed))
    t = np.array(r.risk_trace)
    assert np.all(np.diff(t) <= 1e-9 * np.maximum(t[:-1], 1.0))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_kmedians_distortion_monotone(seed, K):
    X = _blobs(seed, n=60, K=4)
    r = kmedians_fit(X, BaselineParams(K=K, tol=0.0, max_iter=100), init_random(X, K, seed))
    t = np.array(r.risk_trace)
    assert np.all(np.diff(t) <= 1e-9 * np.maximum(t[:-1], 1.0))


def test_kmedians_examples():
    r = kmedians_fit(np.array([0.0, 1.0, 100.0]), BaselineParams(K=1), CentroidSet([[50.0]]))
    assert r.centers[0, 0] == 1.0
    g = np.random.default_rng(0)
    base = g.standard_normal((51, 2))
    X = np.vstack([base, -base])
    r = kmedians_fit(X, BaselineParams(K=1), CentroidSet([[3.0, 3.0]]))
    assert np.allclose(r.centers[0], np.sort(X, axis=0)[(X.shape[0] + 1) // 2 - 1])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4))
def test_trimmed_alpha_zero_is_kmeans(seed, K):
    X = _blobs(seed)
    init = init_kmpp(X, K, seed)
    a = kmeans_fit(X, BaselineParams(K=K), init)
    b = trimmed_kmeans_fit(X, BaselineParams(K=K, trim_alpha=0.0), init)
    assert np.array_equal(a.centers, b.centers)
    assert np.array_equal(a.labels, b.labels)
    assert a.risk_trace == b.risk_trace


def test_trimmed_drops_outlier():
    X = np.array([0.0, 0.0, 0.0, 1000.0])
    r = trimmed_kmeans_fit(X, BaselineParams(K=1, trim_alpha=0.25), CentroidSet([[250.0]]))
    assert r.centers[0, 0] == 0.0
    assert r.retained_mask.tolist() == [True, True, True, False]


def test_trimmed_everything():
    with pytest.raises(InfeasibleError):
        trimmed_kmeans_fit(np.arange(3.0), BaselineParams(K=1, trim_alpha=0.9), CentroidSet([[0.0]]))


def test_restarts_pick_lowest_distortion_and_parallel_equal():
    X = _blobs(7, K=4)
    p = BaselineParams(K=4, n_init=6)
    a = fit_restarts("kmeans", X, p, 3)
    b = fit_restarts("kmeans", X, BaselineParams(K=4, n_init=6, workers=3), 3)
    assert np.array_equal(a.centers, b.centers)
    from kbmom._rng import PHASE_RESTART, derive_seed
    finals = [kmeans_fit(X, p, init_kmpp(X, 4, derive_seed(3, PHASE_RESTART, r))).risk_trace[-1]
              for r in range(6)]
    assert a.risk_trace[-1] == min(finals)
