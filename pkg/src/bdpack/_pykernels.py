"""Pure-Python/numpy fallbacks for the compiled kernels in ``_ckernels``.

The DM search here visits nodes in exactly the same order as the compiled
version, so both return the same table for the same inputs.
"""
from __future__ import annotations

import sys

import numpy as np


def count_differences(moduli: np.ndarray, coords: np.ndarray, offsets: np.ndarray, order: int) -> np.ndarray:
    counts = np.zeros(order, dtype=np.int64)
    if len(offsets) < 2:
        return counts
    sizes = np.diff(offsets)
    radix = np.ones(len(moduli), dtype=np.int64)
    for i in range(len(moduli) - 2, -1, -1):
        radix[i] = radix[i + 1] * moduli[i + 1]
    starts = offsets[:-1]
    for k in np.unique(sizes):
        if k < 2:
            continue
        sel = starts[sizes == k]
        blk = coords[sel[:, None] + np.arange(k)]  # (nb, k, r)
        diff = (blk[:, :, None, :] - blk[:, None, :, :]) % moduli
        ranks = diff @ radix  # (nb, k, k)
        off_diag = ~np.eye(k, dtype=bool)
        counts += np.bincount(ranks[:, off_diag].ravel(), minlength=order)
    return counts


class _Budget(Exception):
    pass


def dm_search_kernel(n, k, sub, orb, osz, norb, reps, order, fixed, budget):
    sub = [int(a) for a in sub]
    orb = [int(a) for a in orb]
    osz = [int(a) for a in osz]
    reps = [int(a) for a in reps]
    order = [int(a) for a in order]
    nrep = len(reps)
    pidx = {}
    used = []
    for i in range(k):
        for j in range(i + 1, k):
            pidx[i, j] = len(used)
            row = [False] * norb
            row[orb[0]] = True
            used.append(row)
    val = [-1] * (nrep * k)

    def check(x, r, v):
        sz = osz[reps[x]]
        for i in range(k):
            if i == r:
                continue
            c = val[x * k + i]
            if c < 0:
                continue
            if i < r:
                d = sub[c * n + v]
                p = pidx[i, r]
            else:
                d = sub[v * n + c]
                p = pidx[r, i]
            if osz[d] != sz or used[p][orb[d]]:
                return False
        return True

    def mark(x, r, v, flag):
        for i in range(k):
            if i == r:
                continue
            c = val[x * k + i]
            if c < 0:
                continue
            if i < r:
                used[pidx[i, r]][orb[sub[c * n + v]]] = flag
            else:
                used[pidx[r, i]][orb[sub[v * n + c]]] = flag

    fvar = []
    for i in range(nrep):
        for j in range(k):
            v = int(fixed[i * k + j])
            if v >= 0:
                if not check(i, j, v):
                    return ("infeasible", 0, None)
                mark(i, j, v, True)
                val[i * k + j] = v
            else:
                fvar.append(i * k + j)

    nodes = 0

    def rec(nfree):
        nonlocal nodes
        if nfree == 0:
            return True
        nodes += 1
        if nodes > budget:
            raise _Budget
        best, bestcnt = -1, 1 << 30
        for t in range(nfree):
            fv = fvar[t]
            x, r = divmod(fv, k)
            cnt = 0
            base = r * n
            for j in range(n):
                if check(x, r, order[base + j]):
                    cnt += 1
                    if cnt >= bestcnt:
                        break
            if cnt < bestcnt:
                bestcnt, best = cnt, t
                if cnt == 0:
                    return False
        fv = fvar[best]
        fvar[best], fvar[nfree - 1] = fvar[nfree - 1], fv
        x, r = divmod(fv, k)
        for j in range(n):
            v = order[r * n + j]
            if check(x, r, v):
                mark(x, r, v, True)
                val[x * k + r] = v
                if rec(nfree - 1):
                    return True
                val[x * k + r] = -1
                mark(x, r, v, False)
        fvar[nfree - 1], fvar[best] = fvar[best], fv
        return False

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * len(fvar) + 1000))
    try:
        found = rec(len(fvar))
    except _Budget:
        return ("budget", nodes, None)
    finally:
        sys.setrecursionlimit(limit)
    if found:
        return ("found", nodes, np.array(val, dtype=np.int32))
    return ("exhausted", nodes, None)
