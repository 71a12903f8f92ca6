# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: difference counting and the DM backtracking search.

Both functions mirror ``_pykernels`` exactly (same visiting order, same
tie-breaks), so the two backends return identical results.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.string cimport memset

cnp.import_array()


def count_differences(const long long[::1] moduli, const long long[:, ::1] coords,
                      const long long[::1] offsets, long long order):
    """Dense difference counts over ordered pairs of distinct positions in each block."""
    cdef Py_ssize_t r = moduli.shape[0], nb = offsets.shape[0] - 1
    cdef Py_ssize_t b, i, j, c, lo, hi
    cdef long long rank, d, m
    counts_arr = np.zeros(order, dtype=np.int64)
    cdef long long[::1] counts = counts_arr
    for b in range(nb):
        lo = offsets[b]
        hi = offsets[b + 1]
        for i in range(lo, hi):
            for j in range(lo, hi):
                if i == j:
                    continue
                rank = 0
                for c in range(r):
                    m = moduli[c]
                    d = coords[i, c] - coords[j, c]
                    if d < 0:
                        d += m
                    rank = rank * m + d
                counts[rank] += 1
    return counts_arr


cdef struct Search:
    int n, k, nrep, norb
    const int *sub
    const int *orb
    const int *osz
    const int *reps
    const int *order
    int *val
    int *pidx
    char *used
    int *fvar
    long long nodes, budget


cdef inline int _check(Search *s, int x, int r, int v) nogil:
    cdef int i, c, d, p, sz = s.osz[s.reps[x]]
    for i in range(s.k):
        if i == r:
            continue
        c = s.val[x * s.k + i]
        if c < 0:
            continue
        if i < r:
            d = s.sub[c * s.n + v]
            p = s.pidx[i * s.k + r]
        else:
            d = s.sub[v * s.n + c]
            p = s.pidx[r * s.k + i]
        if s.osz[d] != sz or s.used[p * s.norb + s.orb[d]]:
            return 0
    return 1


cdef inline void _mark(Search *s, int x, int r, int v, char flag) nogil:
    cdef int i, c, d, p
    for i in range(s.k):
        if i == r:
            continue
        c = s.val[x * s.k + i]
        if c < 0:
            continue
        if i < r:
            d = s.sub[c * s.n + v]
            p = s.pidx[i * s.k + r]
        else:
            d = s.sub[v * s.n + c]
            p = s.pidx[r * s.k + i]
        s.used[p * s.norb + s.orb[d]] = flag


cdef int _rec(Search *s, int nfree) nogil:
    cdef int t, fv, x, r, cnt, best, bestcnt, v, j, res
    if nfree == 0:
        return 1
    s.nodes += 1
    if s.nodes > s.budget:
        return -1
    best = -1
    bestcnt = 1 << 30
    for t in range(nfree):
        fv = s.fvar[t]
        x = fv // s.k
        r = fv % s.k
        cnt = 0
        for j in range(s.n):
            if _check(s, x, r, s.order[r * s.n + j]):
                cnt += 1
                if cnt >= bestcnt:
                    break
        if cnt < bestcnt:
            bestcnt = cnt
            best = t
            if cnt == 0:
                return 0
    fv = s.fvar[best]
    s.fvar[best] = s.fvar[nfree - 1]
    s.fvar[nfree - 1] = fv
    x = fv // s.k
    r = fv % s.k
    for j in range(s.n):
        v = s.order[r * s.n + j]
        if _check(s, x, r, v):
            _mark(s, x, r, v, 1)
            s.val[x * s.k + r] = v
            res = _rec(s, nfree - 1)
            if res != 0:
                return res
            s.val[x * s.k + r] = -1
            _mark(s, x, r, v, 0)
    s.fvar[nfree - 1] = s.fvar[best]
    s.fvar[best] = fv
    return 0


def dm_search_kernel(int n, int k, const int[::1] sub, const int[::1] orb, const int[::1] osz,
                     int norb, const int[::1] reps, const int[::1] order, const int[::1] fixed,
                     long long budget):
    """Most-constrained-cell backtracking over orbit representatives.

    Returns (status, nodes, values) with status in {"found", "exhausted",
    "budget", "infeasible"}; values is the nrep*k table when found.
    """
    cdef Search s
    cdef int nrep = reps.shape[0], i, j, p, t, npair = k * (k - 1) // 2, res
    s.n = n
    s.k = k
    s.nrep = nrep
    s.norb = norb
    s.sub = &sub[0]
    s.orb = &orb[0]
    s.osz = &osz[0]
    s.reps = &reps[0]
    s.order = &order[0]
    s.val = <int *> malloc(nrep * k * sizeof(int))
    s.pidx = <int *> malloc(k * k * sizeof(int))
    s.used = <char *> malloc(npair * norb)
    s.fvar = <int *> malloc(nrep * k * sizeof(int))
    try:
        memset(s.used, 0, npair * norb)
        p = 0
        for i in range(k):
            for j in range(i + 1, k):
                s.pidx[i * k + j] = p
                s.used[p * norb + orb[0]] = 1
                p += 1
        for i in range(nrep * k):
            s.val[i] = -1
        t = 0
        for i in range(nrep):
            for j in range(k):
                if fixed[i * k + j] >= 0:
                    if not _check(&s, i, j, fixed[i * k + j]):
                        return ("infeasible", 0, None)
                    _mark(&s, i, j, fixed[i * k + j], 1)
                    s.val[i * k + j] = fixed[i * k + j]
                else:
                    s.fvar[t] = i * k + j
                    t += 1
        s.nodes = 0
        s.budget = budget
        with nogil:
            res = _rec(&s, t)
        out = None
        if res == 1:
            out = np.array([s.val[i] for i in range(nrep * k)], dtype=np.int32)
        status = "found" if res == 1 else ("exhausted" if res == 0 else "budget")
        return (status, s.nodes, out)
    finally:
        free(s.val)
        free(s.pidx)
        free(s.used)
        free(s.fvar)
