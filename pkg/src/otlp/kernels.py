"""Backend selection for the hot loops.

The compiled extension ``otlp._ckernels`` is used when it imports; otherwise
the numpy fallback in ``otlp._pykernels`` is. Set ``OTLP_KERNELS=python`` to
force the fallback. Inputs whose magnitudes could overflow int64 always take
the arbitrary-precision path.
"""

from __future__ import annotations

import logging
import os

import numpy as np

from otlp import _pykernels

log = logging.getLogger(__name__)

INF = _pykernels.INF
# keep every partial sum well inside int64
_SAFE = 1 << 60

try:
    from otlp import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS = ("cython", "python") if _ckernels is not None else ("python",)


def default_backend() -> str:
    forced = os.environ.get("OTLP_KERNELS", "").strip().lower()
    if forced in BACKENDS:
        return forced
    if forced:
        log.warning("OTLP_KERNELS=%s unavailable, using %s", forced, BACKENDS[0])
    return BACKENDS[0]


BACKEND = default_backend()


def _impl(backend: str | None):
    backend = backend or BACKEND
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not built")
        return _ckernels
    if backend == "python":
        return _pykernels
    raise ValueError(f"unknown kernel backend {backend!r}")


def _fits(costs, rows, bounds) -> bool:
    G = len(costs)
    if max(abs(v) for c in costs for v in c) * G >= _SAFE:
        return False
    for row, b in zip(rows, bounds):
        if abs(b) >= _SAFE or max(abs(v) for c in row for v in c) * G >= _SAFE:
            return False
    return True


def _flatten(costs):
    sizes = [len(c) for c in costs]
    offsets = np.zeros(len(costs) + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    flat = np.fromiter((v for c in costs for v in c), dtype=np.int64, count=int(offsets[-1]))
    return flat, offsets


def enumerate_min(costs, rows=(), bounds=(), backend: str | None = None):
    """Exhaustive search for the lexicographically first cheapest feasible tuple.

    ``costs[g][j]`` and ``rows[r][g][j]`` are ints; a tuple is feasible when
    ``sum_g rows[r][g][choice[g]] <= bounds[r]`` for every ``r``.
    Returns ``(best_cost or None, choice or None, tuples_visited)``.
    """
    if not _fits(costs, rows, bounds):
        found, best, choice, count = _pykernels.enumerate_min_bigint(costs, rows, bounds)
    else:
        flat, offsets = _flatten(costs)
        mat = np.zeros((len(rows), len(flat)), dtype=np.int64)
        for r, row in enumerate(rows):
            mat[r] = _flatten(row)[0]
        b = np.asarray(list(bounds), dtype=np.int64)
        found, best, choice, count = _impl(backend).enumerate_min(flat, offsets, mat, b)
    if not found:
        return None, None, count
    return best, tuple(choice), count


def mckp_table(costs, weights, capacity: int, backend: str | None = None):
    """Backward DP table for one budget row with non-negative integer weights.

    Returns a nested indexable ``table[g][c]``; entries ``>= INF`` (or None on
    the arbitrary-precision path) mark infeasible capacities.
    """
    if not _fits(costs, [weights], [capacity]):
        return _pykernels.mckp_table_bigint(costs, weights, capacity)
    flat, offsets = _flatten(costs)
    w, _ = _flatten(weights)
    return _impl(backend).mckp_table(flat, w, offsets, int(capacity))


def is_unreachable(value) -> bool:
    return value is None or value >= INF
