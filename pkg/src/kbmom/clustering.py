"""K-bMOM clustering.

Each round draws ``B`` bootstrap blocks of ``n_B`` rows, runs one Lloyd step
inside every block starting from the current centers, and adopts the
centers of the block whose empirical risk is the (lower) median. The
starting centers come from the same median-block rule applied to blocks
seeded by k-means++ (or k-medians++).
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from ._rng import PHASE_INIT, PHASE_ITER, as_seed, stream
from .data import CentroidSet, ClusteringResult, Dataset
from .exceptions import DegenerateIterationError, InfeasibleError, InvalidPlanError

INIT_KINDS = {"kbmom_kmpp": 2, "kbmom_kmedpp": 1}

_AITKEN_EPS = 1e-12


@dataclass(frozen=True)
class KbmomParams:
    """Hyperparameters of K-bMOM and Block-k-mom.

    ``init_lloyd`` > 0 runs that many Lloyd iterations inside each block
    after seeding, before the median block is chosen (off by default).
    ``lloyd_max_iter`` and ``lloyd_tol`` only apply to Block-k-mom.
    ``local_trials`` is the number of candidates per greedy seeding step,
    ``None`` meaning ``2 + floor(ln K)``; 1 gives plain k-means++.
    ``n_seedings`` > 1 seeds every block that many times and keeps, per
    block, the seeding with the lowest risk.
    """

    K: int
    B: int
    n_B: int
    epsilon: float = 1e-3
    max_iter: int = 50
    max_block_retries: int = 100
    init_kind: str = "kbmom_kmpp"
    init_lloyd: int = 0
    lloyd_max_iter: int = 300
    lloyd_tol: float = 1e-6
    local_trials: Optional[int] = None
    n_seedings: int = 1
    workers: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise InvalidPlanError("K must be >= 1")
        if self.B < 1:
            raise InvalidPlanError("B must be >= 1")
        if self.n_B <= self.K:
            raise InvalidPlanError(f"block size must exceed K (n_B > K), got n_B={self.n_B}, K={self.K}")
        if self.epsilon <= 0:
            raise InvalidPlanError("epsilon must be > 0")
        if self.max_iter < 1 or self.max_block_retries < 1:
            raise InvalidPlanError("max_iter and max_block_retries must be >= 1")
        if self.init_kind not in INIT_KINDS:
            raise InvalidPlanError(f"init_kind must be one of {sorted(INIT_KINDS)}")
        if self.local_trials is not None and self.local_trials < 1:
            raise InvalidPlanError("local_trials must be >= 1")
        if self.n_seedings < 1:
            raise InvalidPlanError("n_seedings must be >= 1")

    @property
    def trials(self):
        return local_trials(self.K, self.local_trials)


def local_trials(K, requested=None):
    """Candidates per greedy k-means++ step: ``requested`` or ``2 + floor(ln K)``."""
    if requested is not None:
        return int(requested)
    return 2 + int(math.log(K))


@dataclass(frozen=True)
class BlockSelection:
    """The median block of one round: its centers, risk and row indices."""

    centroids: CentroidSet
    risk: float
    block_id: int
    block: np.ndarray


def _points(data):
    if isinstance(data, Dataset):
        return data.points
    X = np.asarray(data, dtype=np.float64)
    return X[:, None] if X.ndim == 1 else X


def _split(n, workers):
    return [c for c in np.array_split(np.arange(n), max(1, workers)) if c.size]


def _blockwise(fn, idx, *per_block, workers=1, shared=()):
    """Run ``fn(idx_chunk, *per_block_chunks, *shared)`` over row chunks of ``idx``.

    Blocks are processed independently by the kernels, so chunked and
    unchunked calls return identical arrays.
    """
    if workers <= 1 or idx.shape[0] < 2:
        return fn(idx, *per_block, *shared)
    chunks = _split(idx.shape[0], workers)

    def run(c):
        return fn(idx[c], *(a[c] for a in per_block), *shared)

    with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
        parts = list(ex.map(run, chunks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(z) for z in zip(*parts))
    return np.concatenate(parts)


def sample_block(n, n_B, rng=None):
    """``n_B`` row indices drawn uniformly with replacement from ``range(n)``."""
    if n < 1 or n_B < 1:
        raise ValueError("need n >= 1 and n_B >= 1")
    return stream(as_seed(rng), PHASE_ITER).integers(0, n, size=n_B)


def assign(points, centers):
    """Nearest center by squared Euclidean distance; ties go to the lowest index."""
    X = _points(points)
    C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    return kernels.assign(X, C)[0]


def block_risk(dataset, block, centers):
    """Lloyd step on one block.

    Returns ``(risk, CentroidSet)``, or ``(inf, None)`` when a cluster gets
    no block point (the flagged outcome).
    """
    X = _points(dataset)
    idx = np.asarray(block, dtype=np.int64)[None, :]
    C = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    risk, means, var, valid = kernels.block_update(X, idx, C)
    if not valid[0]:
        return math.inf, None
    return float(risk[0]), CentroidSet(means[0], var[0])


def _median_position(risk, valid):
    ids = np.flatnonzero(valid)
    if ids.size == 0:
        raise DegenerateIterationError("every block has an empty cluster")
    r = risk[ids]
    med = np.partition(r, (ids.size + 1) // 2 - 1)[(ids.size + 1) // 2 - 1]
    # lowest block id among those holding the median risk
    return int(ids[np.flatnonzero(r == med)[0]])


def median_block_select(risks):
    """Pick the ``(block_id, risk)`` pair holding the lower median risk.

    Flagged blocks are passed with a risk of ``None`` or NaN and ignored.
    Ties on risk go to the lowest block id.
    """
    pairs = list(risks)
    ids = np.array([int(b) for b, _ in pairs], dtype=np.int64)
    r = np.array([np.nan if v is None else float(v) for _, v in pairs])
    valid = np.isfinite(r)
    if not valid.any():
        raise DegenerateIterationError("every block is flagged")
    pos = np.flatnonzero(valid)
    med = np.partition(r[pos], (pos.size + 1) // 2 - 1)[(pos.size + 1) // 2 - 1]
    tied = pos[r[pos] == med]
    i = tied[np.argmin(ids[tied])]
    return int(ids[i]), float(r[i])


def aitken_step(r_prev2, r_prev1, r_curr, epsilon=1e-3):
    """Aitken acceleration on three consecutive median-block risks.

    Returns ``(A, crit, converged)`` with ``A = dR_new / dR_old`` and
    ``crit = dR_new / (1 - A)``, the increment of the extrapolated limit.
    Degenerate denominators report convergence with NaN ``A``/``crit``.
    """
    d_old = r_prev1 - r_prev2
    d_new = r_curr - r_prev1
    if abs(d_old) < _AITKEN_EPS:
        return math.nan, math.nan, True
    A = d_new / d_old
    if abs(1.0 - A) < _AITKEN_EPS:
        return A, math.nan, True
    crit = d_new / (1.0 - A)
    return A, crit, abs(crit) < epsilon


def _keep_best(best, cand):
    """Per block, keep ``cand`` where its risk is strictly lower (first wins ties)."""
    if best is None:
        return cand
    risk, valid = cand[0], cand[-1]
    old_risk, old_valid = best[0], best[-1]
    take = valid & (~old_valid | (risk < old_risk))
    out = []
    for new, old in zip(cand, best):
        t = take.reshape(take.shape + (1,) * (new.ndim - 1))
        out.append(np.where(t, new, old))
    return tuple(out)


def _check_distinct(X, K):
    if np.unique(X, axis=0).shape[0] < K:
        raise InfeasibleError(f"dataset has fewer than K={K} distinct points")


def median_block_init(dataset, params, rng=None):
    """Robust initialisation, returning the full median-block selection.

    Every block is seeded with k-means++ (``kbmom_kmpp``) or k-medians++
    (``kbmom_kmedpp``), its points are assigned to the seeds and its risk is
    computed around the resulting block cluster means. The median-risk
    block supplies the centers and within variances.
    """
    X = _points(dataset)
    n = X.shape[0]
    _check_distinct(X, params.K)
    seed = as_seed(rng)
    power = INIT_KINDS[params.init_kind]
    for attempt in range(params.max_block_retries):
        g = stream(seed, PHASE_INIT, attempt)
        idx = g.integers(0, n, size=(params.B, params.n_B))
        best = None
        for _ in range(params.n_seedings):
            u = g.random((params.B, params.K, params.trials))
            seeds = _blockwise(lambda i, uu: kernels.block_seed(X, i, uu, power), idx, u,
                               workers=params.workers)
            if params.init_lloyd > 0:
                seeds = _blockwise(
                    lambda i, c: kernels.block_lloyd(X, i, c, params.init_lloyd, 0.0)[0],
                    idx, seeds, workers=params.workers)
            best = _keep_best(best, _blockwise(
                lambda i, c: kernels.block_update(X, i, c), idx, seeds, workers=params.workers))
        risk, means, var, valid = best
        if valid.any():
            b = _median_position(risk, valid)
            return BlockSelection(CentroidSet(means[b], var[b]), float(risk[b]), b, idx[b].copy())
    raise DegenerateIterationError(
        f"no valid block after {params.max_block_retries} resamples during initialisation"
    )


def kbmom_init(dataset, params, rng=None):
    """Centers and within variances of the median-risk seeded block."""
    return median_block_init(dataset, params, rng).centroids


def kbmom_fit(dataset, params, rng=None, init=None):
    """Run K-bMOM and return the final partition of every row.

    Stops when the Aitken criterion on the median-block risk falls below
    ``params.epsilon`` or after ``params.max_iter`` rounds. ``init``
    overrides the robust initialisation.
    """
    X = _points(dataset)
    n = X.shape[0]
    seed = as_seed(rng)
    if init is None:
        init = kbmom_init(X, params, seed)
    centers = init.centers
    variances = init.within_variances
    trace = []
    converged = False
    for q in range(params.max_iter):
        for attempt in range(params.max_block_retries):
            idx = stream(seed, PHASE_ITER, q, attempt).integers(0, n, size=(params.B, params.n_B))
            risk, means, var, valid = _blockwise(
                lambda i: kernels.block_update(X, i, centers), idx, workers=params.workers)
            if valid.any():
                break
        else:
            raise DegenerateIterationError(
                f"round {q}: every block had an empty cluster in {params.max_block_retries} resamples"
            )
        b = _median_position(risk, valid)
        centers, variances = means[b], var[b]
        trace.append(float(risk[b]))
        if len(trace) >= 3:
            _, _, done = aitken_step(*trace[-3:], epsilon=params.epsilon)
            if done:
                converged = True
                break
    labels = kernels.assign(X, centers)[0]
    return ClusteringResult(labels, CentroidSet(centers, variances), trace, converged, len(trace))


def block_kmom_fit(dataset, params, rng=None):
    """Block-k-mom: a full k-means++-seeded k-means inside each of ``B``
    bootstrap blocks (best of ``n_seedings`` runs per block), keeping the
    centers of the median-distortion block."""
    X = _points(dataset)
    n = X.shape[0]
    _check_distinct(X, params.K)
    seed = as_seed(rng)
    for attempt in range(params.max_block_retries):
        g = stream(seed, PHASE_INIT, attempt)
        idx = g.integers(0, n, size=(params.B, params.n_B))
        best = None
        for _ in range(params.n_seedings):
            u = g.random((params.B, params.K, params.trials))
            seeds = _blockwise(lambda i, uu: kernels.block_seed(X, i, uu, 2), idx, u,
                               workers=params.workers)
            centers, risk, valid, n_iter = _blockwise(
                lambda i, c: kernels.block_lloyd(X, i, c, params.lloyd_max_iter, params.lloyd_tol),
                idx, seeds, workers=params.workers)
            best = _keep_best(best, (risk, centers, n_iter, valid))
        risk, centers, n_iter, valid = best
        if valid.any():
            break
    else:
        raise DegenerateIterationError(
            f"no valid block after {params.max_block_retries} resamples"
        )
    b = _median_position(risk, valid)
    C = centers[b]
    lab, d2 = kernels.assign(X[idx[b]], C)
    counts = np.bincount(lab, minlength=params.K)
    var = np.bincount(lab, weights=d2, minlength=params.K) / np.maximum(counts, 1)
    labels = kernels.assign(X, C)[0]
    # one selection round; converged reports whether the block's Lloyd run settled
    return ClusteringResult(
        labels,
        CentroidSet(C, var),
        [float(risk[b])],
        bool(n_iter[b] < params.lloyd_max_iter),
        1,
    )
