"""Fallback kernels used when the compiled extension is not built.

Same contracts as ``otlp._ckernels``. The int64 variants vectorise with
numpy; the ``*_bigint`` variants take plain Python lists of arbitrary-size
integers for problems whose magnitudes do not fit int64.
"""

from __future__ import annotations

from itertools import product

import numpy as np

INF = 1 << 62

_CHUNK = 1 << 21


def enumerate_min(costs, offsets, rows, bounds):
    costs = np.asarray(costs, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    rows = np.asarray(rows, dtype=np.int64).reshape(-1, len(costs))
    bounds = np.asarray(bounds, dtype=np.int64)
    G = len(offsets) - 1
    sizes = [int(offsets[g + 1] - offsets[g]) for g in range(G)]
    per_group = [costs[offsets[g]:offsets[g + 1]] for g in range(G)]
    per_row = [[row[offsets[g]:offsets[g + 1]] for g in range(G)] for row in rows]

    rest = 1
    for s in sizes[1:]:
        rest *= s
    step = max(1, _CHUNK // max(1, rest))

    found, best, best_choice = False, 0, ()
    for lo in range(0, sizes[0], step):
        hi = min(sizes[0], lo + step)
        total = _outer_sum([per_group[0][lo:hi], *per_group[1:]])
        feasible = np.ones(total.shape, dtype=bool)
        for r, parts in enumerate(per_row):
            feasible &= _outer_sum([parts[0][lo:hi], *parts[1:]]) <= bounds[r]
        if not feasible.any():
            continue
        masked = np.where(feasible, total, INF)
        flat = int(np.argmin(masked))
        value = int(masked.flat[flat])
        if not found or value < best:
            choice = list(np.unravel_index(flat, total.shape))
            choice[0] += lo
            found, best, best_choice = True, value, tuple(int(c) for c in choice)
    count = rest * sizes[0]
    return found, best, best_choice, count


def _outer_sum(parts):
    out = parts[0]
    for p in parts[1:]:
        out = np.add.outer(out, p)
    return out


def mckp_table(costs, weights, offsets, capacity):
    costs = np.asarray(costs, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.int64)
    offsets = np.asarray(offsets, dtype=np.int64)
    G = len(offsets) - 1
    table = np.full((G + 1, capacity + 1), INF, dtype=np.int64)
    table[G, :] = 0
    for g in range(G - 1, -1, -1):
        nxt = table[g + 1]
        cur = table[g]
        for j in range(offsets[g], offsets[g + 1]):
            w = int(weights[j])
            if w > capacity:
                continue
            shifted = nxt[: capacity + 1 - w]
            cand = np.where(shifted == INF, INF, shifted + costs[j])
            np.minimum(cur[w:], cand, out=cur[w:])
    return table


def enumerate_min_bigint(costs, rows, bounds):
    """``costs[g][j]``, ``rows[r][g][j]``: nested lists of Python ints."""
    found, best, best_choice, count = False, 0, (), 0
    for choice in product(*(range(len(c)) for c in costs)):
        count += 1
        if any(
            sum(row[g][j] for g, j in enumerate(choice)) > b for row, b in zip(rows, bounds)
        ):
            continue
        value = sum(costs[g][j] for g, j in enumerate(choice))
        if not found or value < best:
            found, best, best_choice = True, value, choice
    return found, best, best_choice, count


def mckp_table_bigint(costs, weights, capacity):
    G = len(costs)
    table = [[None] * (capacity + 1) for _ in range(G)] + [[0] * (capacity + 1)]
    for g in range(G - 1, -1, -1):
        nxt, cur = table[g + 1], table[g]
        for v, w in zip(costs[g], weights[g]):
            for c in range(w, capacity + 1):
                prev = nxt[c - w]
                if prev is not None and (cur[c] is None or v + prev < cur[c]):
                    cur[c] = v + prev
    return table
