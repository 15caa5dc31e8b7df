"""Pure numpy implementation of the block kernels.

Used when the compiled extension is unavailable or ``KBMOM_BACKEND=python``.
Reductions run in the same order as the compiled loops (sequential
``cumsum`` / ``np.add.at``) so both backends agree to the last few ulps.
"""

import numpy as np

BACKEND = "python"


def _seqsum(a, axis=-1):
    if a.shape[axis] == 0:
        return np.zeros(np.delete(a.shape, axis))
    return np.take(np.cumsum(a, axis=axis), -1, axis=axis)


def _sqdist(X, C):
    """Squared distances, X (..., n, p) against C (..., K, p) -> (..., n, K)."""
    diff = X[..., :, None, :] - C[..., None, :, :]
    return _seqsum(diff * diff)


def assign(X, C):
    X = np.ascontiguousarray(X, dtype=np.float64)
    C = np.ascontiguousarray(C, dtype=np.float64)
    d2 = _sqdist(X, C)
    labels = np.argmin(d2, axis=-1)
    return labels.astype(np.int64), np.take_along_axis(d2, labels[..., None], -1)[..., 0]


def _broadcast_centers(C, B):
    C = np.asarray(C, dtype=np.float64)
    if C.ndim == 2:
        C = np.broadcast_to(C, (B,) + C.shape)
    return C


def _cluster_means(Xb, labels, K):
    """Per-block cluster sums and counts, accumulated in row order."""
    B, nB, p = Xb.shape
    sums = np.zeros((B, K, p))
    counts = np.zeros((B, K), dtype=np.int64)
    rows = np.repeat(np.arange(B), nB)
    flat = labels.ravel()
    np.add.at(sums, (rows, flat), Xb.reshape(B * nB, p))
    np.add.at(counts, (rows, flat), 1)
    return sums, counts


def block_update(X, idx, C):
    """One Lloyd step inside every block.

    Returns ``(risk, centers, variances, valid)``. Invalid blocks (some
    cluster empty) get ``risk = inf`` and keep their input centers.
    """
    idx = np.asarray(idx, dtype=np.int64)
    B, nB = idx.shape
    C = _broadcast_centers(C, B)
    K = C.shape[1]
    Xb = X[idx]
    labels, _ = assign(Xb, C)
    sums, counts = _cluster_means(Xb, labels, K)
    valid = np.all(counts > 0, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        means = sums / counts[:, :, None]
    means = np.where(valid[:, None, None], means, C)
    own = np.take_along_axis(means, labels[:, :, None], axis=1)
    diff = Xb - own
    dd = _seqsum(diff * diff)
    risk = np.where(valid, _seqsum(dd, axis=1), np.inf)
    vsum = np.zeros((B, K))
    np.add.at(vsum, (np.repeat(np.arange(B), nB), labels.ravel()), dd.ravel())
    with np.errstate(invalid="ignore", divide="ignore"):
        variances = np.where(valid[:, None], vsum / np.maximum(counts, 1), 0.0)
    return risk, np.ascontiguousarray(means), variances, valid


def block_seed(X, idx, u, power):
    """k-means++ (power 2) / k-medians++ (power 1) seeding inside each block.

    ``u`` holds uniforms in [0, 1) of shape (B, K) or (B, K, T). With T > 1
    each step draws T candidates and keeps the one giving the smallest
    total weight, ties to the first candidate (greedy k-means++).
    """
    idx = np.asarray(idx, dtype=np.int64)
    u = np.asarray(u, dtype=np.float64)
    if u.ndim == 2:
        u = u[:, :, None]
    B, nB = idx.shape
    K, T = u.shape[1], u.shape[2]
    Xb = X[idx]
    rows = np.arange(B)
    chosen = np.zeros((B, nB), dtype=bool)
    pos = np.minimum((u[:, 0, 0] * nB).astype(np.int64), nB - 1)
    seeds = np.empty((B, K, X.shape[1]))
    seeds[:, 0] = Xb[rows, pos]
    chosen[rows, pos] = True
    D = _weights(Xb, seeds[:, 0], power)
    for k in range(1, K):
        cand = _draw(D, chosen, u[:, k])
        if T == 1:
            pos = cand[:, 0]
        else:
            pts = Xb[rows[:, None], cand]
            w = _weights(Xb[:, None], pts, power)
            pot = _seqsum(np.minimum(D[:, None, :], w), axis=2)
            pos = cand[rows, np.argmin(pot, axis=1)]
        seeds[:, k] = Xb[rows, pos]
        chosen[rows, pos] = True
        D = np.minimum(D, _weights(Xb, seeds[:, k], power))
    return seeds


def _draw(D, chosen, u):
    """Inverse-CDF draw of one position per (block, trial) from weights ``D``."""
    B, nB = D.shape
    cum = np.cumsum(D, axis=1)
    total = cum[:, -1]
    pos = np.sum(cum[:, None, :] <= (u * total[:, None])[:, :, None], axis=2)
    for b, t in zip(*np.nonzero(pos >= nB)):
        if total[b] > 0:
            pos[b, t] = np.flatnonzero(D[b] > 0)[-1]
    for b in np.flatnonzero(total <= 0):
        free = np.flatnonzero(~chosen[b])
        r = np.minimum((u[b] * free.size).astype(np.int64), free.size - 1)
        pos[b] = free[r]
    return pos


def _weights(Xb, s, power):
    diff = Xb - s[..., None, :]
    d2 = _seqsum(diff * diff)
    return d2 if power == 2 else np.sqrt(d2)


def block_lloyd(X, idx, C0, max_iter, tol):
    """Full Lloyd iterations run independently inside each block.

    Returns ``(centers, risk, valid, n_iter)``.
    """
    idx = np.asarray(idx, dtype=np.int64)
    B, nB = idx.shape
    C = np.array(_broadcast_centers(C0, B), dtype=np.float64)
    K = C.shape[1]
    Xb = X[idx]
    n_iter = np.zeros(B, dtype=np.int64)
    active = np.ones(B, dtype=bool)
    prev = np.full(B, np.nan)
    for it in range(max_iter):
        act = np.flatnonzero(active)
        if act.size == 0:
            break
        labels, d2 = assign(Xb[act], C[act])
        D = _seqsum(d2, axis=1)
        stop = (it > 0) & (prev[act] - D <= tol * prev[act])
        active[act[stop]] = False
        prev[act] = D
        go = np.flatnonzero(~stop)
        if go.size == 0:
            continue
        blk = act[go]
        n_iter[blk] += 1
        sums, counts = _cluster_means(Xb[blk], labels[go], K)
        with np.errstate(invalid="ignore", divide="ignore"):
            C[blk] = np.where(counts[:, :, None] > 0, sums / counts[:, :, None], C[blk])
        for i in np.flatnonzero(np.any(counts == 0, axis=1)):
            b = blk[i]
            order = np.argsort(-d2[go[i]], kind="stable")
            for k, j in zip(np.flatnonzero(counts[i] == 0), order):
                C[b, k] = Xb[b, j]
    labels, d2 = assign(Xb, C)
    risk = _seqsum(d2, axis=1)
    counts = np.zeros((B, K), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(B), nB), labels.ravel()), 1)
    return C, risk, np.all(counts > 0, axis=1), n_iter
