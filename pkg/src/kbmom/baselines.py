"""Reference initialisations and Lloyd-type clusterers: random,
k-means++ and k-medians++ seeding; k-means, k-medians and trimmed k-means."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from ._rng import PHASE_INIT, PHASE_RESTART, as_seed, derive_seed, stream
from .clustering import _points, local_trials
from .data import CentroidSet, ClusteringResult
from .exceptions import InfeasibleError, InvalidPlanError


@dataclass(frozen=True)
class BaselineParams:
    K: int
    max_iter: int = 300
    tol: float = 1e-6
    trim_alpha: float = 0.0
    n_init: int = 10
    local_trials: Optional[int] = None
    workers: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise InvalidPlanError("K must be >= 1")
        if not 0 <= self.trim_alpha < 1:
            raise InvalidPlanError("trim_alpha must lie in [0, 1)")
        if self.n_init < 1 or self.max_iter < 1:
            raise InvalidPlanError("n_init and max_iter must be >= 1")


def init_random(dataset, K, rng=None):
    """``K`` distinct rows chosen uniformly without replacement."""
    X = _points(dataset)
    if X.shape[0] < K:
        raise InfeasibleError(f"cannot pick K={K} rows from n={X.shape[0]}")
    rows = stream(as_seed(rng), PHASE_INIT).choice(X.shape[0], size=K, replace=False)
    return CentroidSet(X[rows])


def seeding_weights(points, centers, power=2):
    """Selection probabilities of the next k-means++ (power 2) or
    k-medians++ (power 1) center given the centers chosen so far."""
    X = _points(points)
    C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    d = np.sqrt(kernels.assign(X, C)[1])
    w = d**power
    total = w.sum()
    if total <= 0:
        return np.full(X.shape[0], 1.0 / X.shape[0])
    return w / total


def init_kmpp(dataset, K, rng=None, power=2, trials=None):
    """k-means++ (``power=2``) or k-medians++ (``power=1``) seeding.

    The first center is a uniform row. Each later step draws ``trials``
    candidates with probability proportional to ``D(x)**power``, the
    distance to the nearest chosen center, and keeps the candidate that
    minimises the summed weights afterwards (``trials=1`` is the plain
    variant; ``None`` means ``2 + floor(ln K)``). If every weight is zero
    the draw falls back to a uniform choice among rows not yet picked.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    X = _points(dataset)
    n = X.shape[0]
    if n < K:
        raise InfeasibleError(f"cannot seed K={K} centers from n={n} rows")
    u = stream(as_seed(rng), PHASE_INIT).random((1, K, local_trials(K, trials)))
    seeds = kernels.block_seed(X, np.arange(n, dtype=np.int64)[None, :], u, power)
    return CentroidSet(seeds[0])


def _means(X, labels, K):
    sums = np.zeros((K, X.shape[1]))
    counts = np.zeros(K, dtype=np.int64)
    np.add.at(sums, labels, X)
    np.add.at(counts, labels, 1)
    return sums, counts


def _repair(C, X, dist, empty):
    """Move each empty cluster's center to the next farthest row."""
    order = np.argsort(-dist, kind="stable")
    for k, j in zip(empty, order):
        C[k] = X[j]


def _lloyd_update(X, labels, dist, C):
    sums, counts = _means(X, labels, C.shape[0])
    new = C.copy()
    nz = counts > 0
    new[nz] = sums[nz] / counts[nz, None]
    _repair(new, X, dist, np.flatnonzero(~nz))
    return new


def _seqsum(a):
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def _iterate(X, C, params, assign_fn, update_fn, score_fn):
    """Shared Lloyd skeleton: update, reassign, record, stop on small gain.

    Each iteration performs one update and appends the resulting score, so
    ``risk_trace`` has one entry per iteration.
    """
    labels, dist = assign_fn(X, C)
    D = score_fn(labels, dist)
    trace, converged = [], False
    for _ in range(params.max_iter):
        C = update_fn(X, labels, dist, C)
        labels, dist = assign_fn(X, C)
        new = score_fn(labels, dist)
        trace.append(new)
        if D - new <= params.tol * D:
            converged = True
            break
        D = new
    return C, labels, dist, trace, converged


def _centroids(X, labels, dist, C):
    counts = np.bincount(labels, minlength=C.shape[0])
    var = np.bincount(labels, weights=dist, minlength=C.shape[0]) / np.maximum(counts, 1)
    return CentroidSet(C, var)


def kmeans_fit(dataset, params, init):
    """Lloyd's algorithm from ``init``.

    Stops once the relative distortion decrease is at most ``params.tol``.
    ``risk_trace`` holds the distortion after every update.
    """
    X = _points(dataset)
    C0 = np.array(init.centers, dtype=np.float64)
    C, labels, d2, trace, converged = _iterate(
        X, C0, params, kernels.assign, _lloyd_update, lambda _, d: _seqsum(d))
    return ClusteringResult(labels, _centroids(X, labels, d2, C), trace, converged, len(trace))


def _manhattan(X, C):
    d = np.abs(X[:, None, :] - C[None, :, :]).sum(axis=2)
    labels = np.argmin(d, axis=1)
    return labels, d[np.arange(X.shape[0]), labels]


def _lower_median_rows(a):
    r = (a.shape[0] + 1) // 2 - 1
    return np.partition(a, r, axis=0)[r]


def _median_update(X, labels, dist, C):
    new = C.copy()
    empty = []
    for k in range(C.shape[0]):
        members = X[labels == k]
        if members.shape[0]:
            new[k] = _lower_median_rows(members)
        else:
            empty.append(k)
    _repair(new, X, dist, empty)
    return new


def kmedians_fit(dataset, params, init):
    """k-medians: Manhattan assignment, coordinatewise lower-median update."""
    X = _points(dataset)
    C0 = np.array(init.centers, dtype=np.float64)
    C, labels, d1, trace, converged = _iterate(
        X, C0, params, _manhattan, _median_update, lambda _, d: _seqsum(d))
    return ClusteringResult(labels, _centroids(X, labels, d1, C), trace, converged, len(trace))


def trimmed_kmeans_fit(dataset, params, init):
    """Trimmed k-means.

    Each round assigns every row, drops the ``ceil(alpha * n)`` rows farthest
    from their centers, and updates centers on the rest. All rows are
    labelled by their nearest center; ``retained_mask`` marks the rows kept
    in the final round and ``risk_trace`` is the trimmed distortion.
    """
    X = _points(dataset)
    n = X.shape[0]
    h = math.ceil(params.trim_alpha * n)
    if h >= n:
        raise InfeasibleError(f"trimming {h} of {n} rows leaves nothing to fit")

    def keep_mask(d2):
        keep = np.ones(n, dtype=bool)
        if h:
            keep[np.argsort(d2, kind="stable")[n - h:]] = False
        return keep

    def update(X, labels, d2, C):
        keep = keep_mask(d2)
        return _lloyd_update(X[keep], labels[keep], d2[keep], C)

    C0 = np.array(init.centers, dtype=np.float64)
    C, labels, d2, trace, converged = _iterate(
        X, C0, params, kernels.assign, update, lambda _, d: _seqsum(d[keep_mask(d)]))
    keep = keep_mask(d2)
    res = ClusteringResult(
        labels, _centroids(X[keep], labels[keep], d2[keep], C), trace, converged, len(trace)
    )
    res.retained_mask = keep
    return res


FITTERS = {
    "kmeans": (kmeans_fit, 2),
    "kmedians": (kmedians_fit, 2),
    "trimmed-kmeans": (trimmed_kmeans_fit, 2),
}


def fit_restarts(name, dataset, params, rng=None):
    """Best of ``params.n_init`` k-means++-seeded runs of the named fitter.

    The winner has the lowest final distortion, ties going to the lowest
    restart index; each restart has its own derived seed.
    """
    fitter, power = FITTERS[name]
    X = _points(dataset)
    seed = as_seed(rng)

    def run(r):
        init = init_kmpp(X, params.K, derive_seed(seed, PHASE_RESTART, r), power,
                         params.local_trials)
        return fitter(X, params, init)

    if params.workers > 1:
        with ThreadPoolExecutor(max_workers=params.workers) as ex:
            results = list(ex.map(run, range(params.n_init)))
    else:
        results = [run(r) for r in range(params.n_init)]
    best = min(range(len(results)), key=lambda r: (results[r].risk_trace[-1], r))
    return results[best]
