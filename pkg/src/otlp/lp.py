"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves ``min c.x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub``,
``x >= 0``. Sized for the relaxations built by the solver: a handful of rows
and a few hundred columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-6


@dataclass
class LPResult:
    """``duals`` holds one non-negative multiplier per ``<=`` row.

    At an optimum these are the row prices; on infeasibility they are the
    phase-one (Farkas) multipliers.
    """

    status: str
    x: np.ndarray | None
    value: float
    iterations: int
    duals: np.ndarray | None = None


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int]):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        colv = T[:, col].copy()
        colv[row] = 0.0
        T -= np.outer(colv, T[row])
        self.basis[row - 1] = col
        self.iterations += 1

    def run(self, n_cols: int, max_iter: int) -> str:
        """Pivot until no reduced cost among the first ``n_cols`` is negative."""
        T = self.T
        while True:
            costs = T[0, :n_cols]
            candidates = np.flatnonzero(costs < -COST_TOL)
            if candidates.size == 0:
                return OPTIMAL
            col = int(candidates[0])  # Bland: lowest index enters
            column = T[1:, col]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return UNBOUNDED
            ratios = T[1 + rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            # Bland: among tied rows, the lowest basic index leaves
            leave = int(min(ties, key=lambda r: self.basis[r]))
            self.pivot(leave + 1, col)
            if self.iterations > max_iter:
                raise RuntimeError("simplex iteration limit exceeded")


def simplex(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, max_iter: int = 50_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    n = c.size
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float)
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float)
    m_eq, m_ub = A_eq.shape[0], A_ub.shape[0]
    m = m_eq + m_ub

    # scale rows and objective to unit max-magnitude
    A = np.zeros((m, n + m_ub))
    b = np.concatenate([b_eq, b_ub])
    A[:m_eq, :n] = A_eq
    A[m_eq:, :n] = A_ub
    A[m_eq:, n:] = np.eye(m_ub)
    for i in range(m):
        s = np.abs(A[i, :n]).max() if n else 0.0
        if s > 0:
            A[i] /= s
            b[i] /= s
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]
    c_scale = np.abs(c).max() if n else 0.0
    c_scale = c_scale if c_scale > 0 else 1.0
    c_full = np.concatenate([c / c_scale, np.zeros(m_ub)])
    n_real = n + m_ub

    # phase 1: one artificial per row
    T = np.zeros((m + 1, n_real + m + 1))
    T[1:, :n_real] = A
    T[1:, n_real:n_real + m] = np.eye(m)
    T[1:, -1] = b
    T[0, :n_real] = -A.sum(axis=0)
    T[0, -1] = -b.sum()
    tab = _Tableau(T, list(range(n_real, n_real + m)))
    tab.run(n_real, max_iter)
    if -T[0, -1] > FEAS_TOL:
        farkas = np.clip(T[0, n:n_real], 0.0, None)
        return LPResult(INFEASIBLE, None, float("inf"), tab.iterations, farkas)

    # drive remaining artificials out of the basis; drop redundant rows
    keep = []
    for r in range(m):
        if tab.basis[r] >= n_real:
            row = T[r + 1, :n_real]
            nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
            if nz.size:
                tab.pivot(r + 1, int(nz[0]))
                keep.append(r)
        else:
            keep.append(r)
    T = np.vstack([T[:1], T[[r + 1 for r in keep]]])
    T = np.hstack([T[:, :n_real], T[:, -1:]])
    basis = [tab.basis[r] for r in keep]

    # phase 2
    T[0, :] = 0.0
    T[0, :n_real] = c_full
    for i, col in enumerate(basis):
        T[0] -= c_full[col] * T[i + 1]
    tab2 = _Tableau(T, basis)
    tab2.iterations = tab.iterations
    status = tab2.run(n_real, max_iter)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, None, float("-inf"), tab2.iterations)
    x = np.zeros(n_real)
    for i, col in enumerate(tab2.basis):
        x[col] = T[i + 1, -1]
    x = np.clip(x[:n], 0.0, None)
    # a slack is scaled with its row, so its reduced cost is the unscaled price
    duals = np.clip(T[0, n:n_real], 0.0, None) * c_scale
    return LPResult(OPTIMAL, x, float(c @ x), tab2.iterations, duals)
