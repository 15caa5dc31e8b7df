# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled block kernels. Same contracts as ``kbmom._kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline double _sq(const double[:, ::1] X, Py_ssize_t i,
                       const double[:] c, Py_ssize_t p) noexcept nogil:
    cdef double d = 0.0, t
    cdef Py_ssize_t j
    for j in range(p):
        t = X[i, j] - c[j]
        d += t * t
    return d


def assign(X, C):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Cv = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = Xv.shape[0], p = Xv.shape[1], K = Cv.shape[0]
    labels = np.empty(n, dtype=np.int64)
    d2 = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] lv = labels
    cdef double[::1] dv = d2
    cdef Py_ssize_t i, k
    cdef double best, d
    cdef cnp.int64_t arg
    with nogil:
        for i in range(n):
            best = INFINITY
            arg = 0
            for k in range(K):
                d = _sq(Xv, i, Cv[k], p)
                if d < best:
                    best = d
                    arg = k
            lv[i] = arg
            dv[i] = best
    return labels, d2


cdef inline Py_ssize_t _nearest(const double[:, ::1] X, Py_ssize_t i,
                                const double[:, :] C, Py_ssize_t K, Py_ssize_t p,
                                double* dist) noexcept nogil:
    cdef double best = INFINITY, d
    cdef Py_ssize_t k, arg = 0
    for k in range(K):
        d = _sq(X, i, C[k], p)
        if d < best:
            best = d
            arg = k
    dist[0] = best
    return arg


def block_update(X, idx, C):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    Ca = np.asarray(C, dtype=np.float64)
    if Ca.ndim == 2:
        Ca = np.broadcast_to(Ca, (iv.shape[0],) + Ca.shape)
    cdef const double[:, :, :] Cv = Ca
    cdef Py_ssize_t B = iv.shape[0], nB = iv.shape[1], K = Cv.shape[1], p = Xv.shape[1]
    risk = np.empty(B, dtype=np.float64)
    means = np.zeros((B, K, p), dtype=np.float64)
    variances = np.zeros((B, K), dtype=np.float64)
    valid = np.zeros(B, dtype=np.bool_)
    cdef double[::1] rv = risk
    cdef double[:, :, ::1] mv = means
    cdef double[:, ::1] vv = variances
    cdef cnp.npy_bool[::1] okv = valid
    lab_a = np.empty(nB, dtype=np.int64)
    cnt_a = np.empty(K, dtype=np.int64)
    cdef cnp.int64_t[::1] lab = lab_a
    cdef cnp.int64_t[::1] cnt = cnt_a
    cdef Py_ssize_t b, j, k, r, row
    cdef double d, t, tot
    cdef bint ok
    with nogil:
        for b in range(B):
            for k in range(K):
                cnt[k] = 0
                for r in range(p):
                    mv[b, k, r] = 0.0
            for j in range(nB):
                row = iv[b, j]
                k = _nearest(Xv, row, Cv[b], K, p, &d)
                lab[j] = k
                cnt[k] += 1
                for r in range(p):
                    mv[b, k, r] += Xv[row, r]
            ok = True
            for k in range(K):
                if cnt[k] == 0:
                    ok = False
            okv[b] = ok
            if not ok:
                rv[b] = INFINITY
                for k in range(K):
                    for r in range(p):
                        mv[b, k, r] = Cv[b, k, r]
                continue
            for k in range(K):
                for r in range(p):
                    mv[b, k, r] = mv[b, k, r] / cnt[k]
            tot = 0.0
            for j in range(nB):
                row = iv[b, j]
                k = lab[j]
                d = 0.0
                for r in range(p):
                    t = Xv[row, r] - mv[b, k, r]
                    d += t * t
                tot += d
                vv[b, k] += d
            rv[b] = tot
            for k in range(K):
                vv[b, k] = vv[b, k] / cnt[k]
    return risk, means, variances, valid


cdef inline Py_ssize_t _draw(double[::1] D, unsigned char[::1] chosen, Py_ssize_t nB,
                             double total, double u) noexcept nogil:
    cdef Py_ssize_t j, r, nfree, pos = nB
    cdef double cum = 0.0, target
    if total > 0:
        target = u * total
        for j in range(nB):
            cum += D[j]
            if cum > target:
                return j
        for j in range(nB - 1, -1, -1):
            if D[j] > 0:
                return j
        return nB - 1
    nfree = 0
    for j in range(nB):
        if not chosen[j]:
            nfree += 1
    r = <Py_ssize_t>(u * nfree)
    if r > nfree - 1:
        r = nfree - 1
    for j in range(nB):
        if not chosen[j]:
            if r == 0:
                return j
            r -= 1
    return pos


cdef inline double _dist(const double[:, ::1] X, Py_ssize_t a, Py_ssize_t c,
                         Py_ssize_t p, int power) noexcept nogil:
    cdef double d = 0.0, t
    cdef Py_ssize_t r
    for r in range(p):
        t = X[a, r] - X[c, r]
        d += t * t
    if power == 1:
        d = sqrt(d)
    return d


def block_seed(X, idx, u, int power):
    u3 = np.asarray(u, dtype=np.float64)
    if u3.ndim == 2:
        u3 = u3[:, :, None]
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    cdef const double[:, :, ::1] uv = np.ascontiguousarray(u3)
    cdef Py_ssize_t B = iv.shape[0], nB = iv.shape[1], K = uv.shape[1], T = uv.shape[2]
    cdef Py_ssize_t p = Xv.shape[1]
    seeds = np.empty((B, K, p), dtype=np.float64)
    cdef double[:, :, ::1] sv = seeds
    D_a = np.empty(nB, dtype=np.float64)
    ch_a = np.empty(nB, dtype=np.uint8)
    cdef double[::1] D = D_a
    cdef unsigned char[::1] chosen = ch_a
    cdef Py_ssize_t b, j, k, r, t, pos, cpos, row
    cdef double d, total, pot, best
    with nogil:
        for b in range(B):
            for j in range(nB):
                chosen[j] = 0
            pos = <Py_ssize_t>(uv[b, 0, 0] * nB)
            if pos > nB - 1:
                pos = nB - 1
            for k in range(K):
                if k > 0:
                    total = 0.0
                    for j in range(nB):
                        total += D[j]
                    best = 0.0
                    for t in range(T):
                        cpos = _draw(D, chosen, nB, total, uv[b, k, t])
                        if T == 1:
                            pos = cpos
                            break
                        # greedy step: keep the candidate with the smallest potential
                        pot = 0.0
                        for j in range(nB):
                            d = _dist(Xv, iv[b, j], iv[b, cpos], p, power)
                            pot += d if d < D[j] else D[j]
                        if t == 0 or pot < best:
                            best = pot
                            pos = cpos
                chosen[pos] = 1
                row = iv[b, pos]
                for r in range(p):
                    sv[b, k, r] = Xv[row, r]
                for j in range(nB):
                    d = _dist(Xv, iv[b, j], row, p, power)
                    if k == 0 or d < D[j]:
                        D[j] = d
    return seeds


def block_lloyd(X, idx, C0, Py_ssize_t max_iter, double tol):
    cdef const double[:, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] iv = np.ascontiguousarray(idx, dtype=np.int64)
    Ca = np.asarray(C0, dtype=np.float64)
    if Ca.ndim == 2:
        Ca = np.broadcast_to(Ca, (iv.shape[0],) + Ca.shape)
    centers = np.array(Ca, dtype=np.float64, order="C")
    cdef double[:, :, ::1] Cv = centers
    cdef Py_ssize_t B = iv.shape[0], nB = iv.shape[1], K = Cv.shape[1], p = Xv.shape[1]
    risk = np.empty(B, dtype=np.float64)
    valid = np.zeros(B, dtype=np.bool_)
    n_iter = np.zeros(B, dtype=np.int64)
    cdef double[::1] rv = risk
    cdef cnp.npy_bool[::1] okv = valid
    cdef cnp.int64_t[::1] itv = n_iter
    lab_a = np.empty(nB, dtype=np.int64)
    d2_a = np.empty(nB, dtype=np.float64)
    cnt_a = np.empty(K, dtype=np.int64)
    sums_a = np.empty((K, p), dtype=np.float64)
    used_a = np.empty(nB, dtype=np.uint8)
    cdef cnp.int64_t[::1] lab = lab_a
    cdef double[::1] d2 = d2_a
    cdef cnp.int64_t[::1] cnt = cnt_a
    cdef double[:, ::1] sums = sums_a
    cdef unsigned char[::1] used = used_a
    cdef Py_ssize_t b, it, j, k, r, row, far
    cdef double D, prev, d, best
    cdef bint ok
    with nogil:
        for b in range(B):
            prev = 0.0
            for it in range(max_iter):
                D = 0.0
                for j in range(nB):
                    lab[j] = _nearest(Xv, iv[b, j], Cv[b], K, p, &d)
                    d2[j] = d
                    D += d
                if it > 0 and prev - D <= tol * prev:
                    break
                prev = D
                itv[b] += 1
                for k in range(K):
                    cnt[k] = 0
                    for r in range(p):
                        sums[k, r] = 0.0
                for j in range(nB):
                    k = lab[j]
                    cnt[k] += 1
                    row = iv[b, j]
                    for r in range(p):
                        sums[k, r] += Xv[row, r]
                for j in range(nB):
                    used[j] = 0
                for k in range(K):
                    if cnt[k] > 0:
                        for r in range(p):
                            Cv[b, k, r] = sums[k, r] / cnt[k]
                    else:
                        # farthest not-yet-used point, lowest position on ties
                        far = -1
                        best = -1.0
                        for j in range(nB):
                            if not used[j] and d2[j] > best:
                                best = d2[j]
                                far = j
                        used[far] = 1
                        row = iv[b, far]
                        for r in range(p):
                            Cv[b, k, r] = Xv[row, r]
            D = 0.0
            for k in range(K):
                cnt[k] = 0
            for j in range(nB):
                k = _nearest(Xv, iv[b, j], Cv[b], K, p, &d)
                cnt[k] += 1
                D += d
            rv[b] = D
            ok = True
            for k in range(K):
                if cnt[k] == 0:
                    ok = False
            okv[b] = ok
    return centers, risk, valid, n_iter
