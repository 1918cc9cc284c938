# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for exhaustive enumeration and the knapsack DP.

Inputs use a flat layout: candidate ``j`` of group ``g`` lives at position
``offsets[g] + j``. All arithmetic is int64; callers guarantee no overflow.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t i64

cdef i64 INF = (<i64>1) << 62


def enumerate_min(i64[::1] costs, i64[::1] offsets, i64[:, ::1] rows, i64[::1] bounds):
    """Lexicographically first feasible tuple of minimum cost.

    Returns ``(found, best_cost, choice, tuples_visited)``.
    """
    cdef Py_ssize_t G = offsets.shape[0] - 1
    cdef Py_ssize_t R = rows.shape[0]
    cdef Py_ssize_t g, r, j
    cdef i64 count = 0, best = 0
    cdef bint found = False, ok
    idx_arr = np.full(G, -1, dtype=np.int64)
    best_arr = np.zeros(G, dtype=np.int64)
    pc_arr = np.zeros(G + 1, dtype=np.int64)
    pr_arr = np.zeros((R, G + 1), dtype=np.int64)
    cdef i64[::1] idx = idx_arr
    cdef i64[::1] best_idx = best_arr
    cdef i64[::1] pc = pc_arr
    cdef i64[:, ::1] pr = pr_arr

    g = 0
    while g >= 0:
        idx[g] += 1
        if idx[g] >= offsets[g + 1] - offsets[g]:
            idx[g] = -1
            g -= 1
            continue
        j = offsets[g] + idx[g]
        pc[g + 1] = pc[g] + costs[j]
        for r in range(R):
            pr[r, g + 1] = pr[r, g] + rows[r, j]
        if g == G - 1:
            count += 1
            ok = True
            for r in range(R):
                if pr[r, G] > bounds[r]:
                    ok = False
                    break
            if ok and (not found or pc[G] < best):
                found = True
                best = pc[G]
                for r in range(G):
                    best_idx[r] = idx[r]
        else:
            g += 1
    return found, int(best), tuple(int(v) for v in best_arr), int(count)


def mckp_table(i64[::1] costs, i64[::1] weights, i64[::1] offsets, i64 capacity):
    """``best[g, c]``: least cost of groups ``g..`` within remaining capacity ``c``.

    Entries equal to ``1 << 62`` mark capacities no completion fits in.
    """
    cdef Py_ssize_t G = offsets.shape[0] - 1
    cdef Py_ssize_t g, c, j
    cdef i64 w, v, cand
    table = np.full((G + 1, capacity + 1), INF, dtype=np.int64)
    cdef i64[:, ::1] best = table
    for c in range(capacity + 1):
        best[G, c] = 0
    for g in range(G - 1, -1, -1):
        for j in range(offsets[g], offsets[g + 1]):
            w = weights[j]
            if w > capacity:
                continue
            v = costs[j]
            for c in range(w, capacity + 1):
                if best[g + 1, c - w] == INF:
                    continue
                cand = v + best[g + 1, c - w]
                if cand < best[g, c]:
                    best[g, c] = cand
    return table
