"""Exact solvers for :class:`~otlp.model.SelectionProblem`.

``solve`` picks the cheapest sound method: a per-group scan when there are
no coupling rows, a multiple-choice knapsack DP for a single non-negative
integer budget row, and best-bound branch-and-bound over the LP relaxation
otherwise. ``solve_bruteforce`` enumerates every tuple and serves as the
oracle.

All methods work on an integer rendering of the problem (see
:func:`integer_form`) and share one tie-break: among optimal tuples, the one
whose per-subspace thresholds are lexicographically smallest.
"""

from __future__ import annotations

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Hashable, Sequence

import numpy as np

from otlp import kernels
from otlp._numeric import lcm_of_denominators
from otlp.errors import InfeasibleError, OTLPError, ResourceLimitError
from otlp.lp import OPTIMAL, simplex
from otlp.metrics import satisfies
from otlp.model import GLOBAL, MAXIMIZE, SelectionProblem, audit_value
from otlp.sensitivity import ThresholdRow

log = logging.getLogger(__name__)

# float objectives are compared on a 2**-40 lattice (~9.1e-13)
QUANTUM = 1 << 40

DEFAULT_NODE_LIMIT = 10**6
DEFAULT_TUPLE_LIMIT = 10**7
DP_CAPACITY_LIMIT = 4_000_000

PROVED_OPTIMAL = "proved-optimal"
ORACLE_VERIFIED = "oracle-verified"
NO_CERTIFICATE = "none"


@dataclass(frozen=True)
class IntegerForm:
    """Minimisation over integer costs with ``<=`` integer rows only.

    Objective values map back as ``sign * key / unit``.
    """

    costs: tuple[tuple[int, ...], ...]
    rows: tuple[tuple[tuple[int, ...], ...], ...]
    bounds: tuple[int, ...]
    labels: tuple[str, ...]
    sign: int
    unit: int

    def key(self, choice: Sequence[int]) -> int:
        return sum(self.costs[g][j] for g, j in enumerate(choice))

    def feasible(self, choice: Sequence[int]) -> bool:
        return all(
            sum(row[g][j] for g, j in enumerate(choice)) <= b
            for row, b in zip(self.rows, self.bounds)
        )

    def to_objective(self, key: float) -> float:
        return self.sign * key / self.unit


def integer_form(problem: SelectionProblem, check: bool = True) -> IntegerForm:
    """Scale the problem to integers and normalise every row to ``<=``.

    Rows no selection can violate are dropped. With ``check`` set, a row no
    selection can satisfy raises InfeasibleError straight away.
    """
    sign = -1 if problem.direction == MAXIMIZE else 1
    if problem.exact:
        unit = lcm_of_denominators(v for coefs in problem.coefficients for v in coefs)
        costs = tuple(tuple(sign * int(v * unit) for v in coefs) for coefs in problem.coefficients)
    else:
        unit = QUANTUM
        costs = tuple(
            tuple(sign * round(float(v) * QUANTUM) for v in coefs) for coefs in problem.coefficients
        )

    rows, bounds, labels = [], [], []
    for con in problem.constraints:
        den = lcm_of_denominators([con.bound, *(v for c in con.coefficients for v in c)])
        flip = -1 if con.op == ">=" else 1
        coefs = [[flip * int(v * den) for v in c] for c in con.coefficients]
        bound = flip * int(con.bound * den)
        g = math.gcd(bound, *(v for c in coefs for v in c))
        if g > 1:
            coefs = [[v // g for v in c] for c in coefs]
            bound //= g
        if sum(max(c) for c in coefs) <= bound:
            continue
        if check and sum(min(c) for c in coefs) > bound:
            raise InfeasibleError(
                f"no selection satisfies {con.label}", cause="coupling", constraint=con.label
            )
        rows.append(tuple(tuple(c) for c in coefs))
        bounds.append(bound)
        labels.append(con.label)
    return IntegerForm(costs, tuple(rows), tuple(bounds), tuple(labels), sign, unit)


@dataclass(frozen=True)
class Choice:
    subspace: Hashable
    index: int
    threshold: float
    row: ThresholdRow | None


@dataclass(frozen=True)
class SolverStats:
    method: str
    nodes: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    tuples: int = 0
    wall_time: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Solution:
    choices: tuple[Choice, ...]
    objective_value: Fraction | float
    stats: SolverStats
    certificate: str

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(c.index for c in self.choices)

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(c.threshold for c in self.choices)


@dataclass
class LPRelaxation:
    """LP relaxation over per-group index ranges.

    ``weights[g]`` covers the full candidate list of group ``g`` (zeros
    outside the allowed range). ``bound`` is in objective units: a lower
    bound when minimising, an upper bound when maximising.
    """

    feasible: bool
    weights: tuple[np.ndarray, ...]
    bound: float
    iterations: int


def solve_lp(problem: SelectionProblem, allowed: Sequence[tuple[int, int]] | None = None) -> LPRelaxation:
    form = integer_form(problem, check=False)
    relax = _Relaxation(form)
    ranges = tuple(allowed) if allowed is not None else relax.full
    res = relax.solve(ranges)
    if res is None or res[1] is None:
        empty = tuple(np.zeros(len(c)) for c in form.costs)
        return LPRelaxation(False, empty, math.nan, relax.iterations)
    weights = res[1]
    value = sum(float(c @ w) for c, w in zip(relax.costs, weights))
    return LPRelaxation(True, weights, form.to_objective(value), relax.iterations)


class _Relaxation:
    """LP relaxations of an IntegerForm restricted to index ranges.

    Node bounds are Lagrangian: the LP only supplies multipliers for the
    coupling rows, and the bound ``sum_g min_j (c + lam.a) - lam.b`` is
    valid for any non-negative multipliers. Inexact simplex output can
    therefore weaken a bound but never cut off an optimum.
    """

    def __init__(self, form: IntegerForm):
        self.form = form
        self.G = len(form.costs)
        self.costs = [np.asarray(c, dtype=float) for c in form.costs]
        self.rows = [[np.asarray(c, dtype=float) for c in row] for row in form.rows]
        self.bounds = np.asarray(form.bounds, dtype=float)
        self.full = tuple((0, len(c)) for c in form.costs)
        self.iterations = 0
        self.solves = 0

    def quick_infeasible(self, ranges) -> bool:
        for row, b in zip(self.form.rows, self.form.bounds):
            if sum(min(row[g][lo:hi]) for g, (lo, hi) in enumerate(ranges)) > b:
                return True
        return False

    def separable_bound(self, ranges) -> int:
        return sum(min(self.form.costs[g][lo:hi]) for g, (lo, hi) in enumerate(ranges))

    def _lagrangian(self, ranges, lam, base: bool) -> float:
        """Safe lower bound of ``base*c.x + lam.(A x - b)`` over all tuples."""
        total = -float(lam @ self.bounds)
        scale = float(np.abs(lam) @ np.abs(self.bounds))
        for g, (lo, hi) in enumerate(ranges):
            vals = self.costs[g][lo:hi] * (1.0 if base else 0.0)
            for lr, row in zip(lam, self.rows):
                if lr:
                    vals = vals + lr * row[g][lo:hi]
            total += float(vals.min())
            scale += float(np.abs(vals).max())
        return total - 1e-11 * (scale + 1.0)

    def solve(self, ranges):
        """``(lower_bound, weights)``; None when the node is provably empty.

        ``weights`` is None when the LP reported infeasibility without a
        usable certificate; the bound is then the separable one.
        """
        if self.quick_infeasible(ranges):
            return None
        sizes = [hi - lo for lo, hi in ranges]
        n = sum(sizes)
        c = np.concatenate([self.costs[g][lo:hi] for g, (lo, hi) in enumerate(ranges)])
        A_eq = np.zeros((self.G, n))
        pos = 0
        for g, s in enumerate(sizes):
            A_eq[g, pos:pos + s] = 1.0
            pos += s
        A_ub = np.array(
            [np.concatenate([row[g][lo:hi] for g, (lo, hi) in enumerate(ranges)]) for row in self.rows]
        ).reshape(len(self.rows), n)
        res = simplex(c, A_eq, np.ones(self.G), A_ub, self.bounds)
        self.iterations += res.iterations
        self.solves += 1
        if res.status != OPTIMAL:
            if res.duals is not None and self._lagrangian(ranges, res.duals, base=False) > 0:
                return None
            return float(self.separable_bound(ranges)), None
        lower = self._lagrangian(ranges, res.duals, base=True)
        weights = []
        pos = 0
        for g, (lo, hi) in enumerate(ranges):
            w = np.zeros(len(self.costs[g]))
            w[lo:hi] = res.x[pos:pos + hi - lo]
            weights.append(w)
            pos += hi - lo
        return lower, tuple(weights)


def _fractional_mass(w: np.ndarray) -> float:
    frac = w[(w > 1e-9) & (w < 1 - 1e-9)]
    return float(frac.sum())


def _integral_choice(weights) -> tuple[int, ...] | None:
    choice = []
    for w in weights:
        j = int(np.argmax(w))
        if w[j] < 1 - 1e-9:
            return None
        choice.append(j)
    return tuple(choice)


def _split(ranges, weights):
    """Children of a node: branch on the group with the most fractional mass."""
    masses = [_fractional_mass(w) for w in weights] if weights is not None else [0.0] * len(ranges)
    g = max(range(len(masses)), key=lambda i: (masses[i], -i))
    lo, hi = ranges[g]
    if masses[g] > 0:
        w = weights[g]
        cum = np.cumsum(w[lo:hi])
        k = lo + int(np.searchsorted(cum, 0.5 - 1e-12))
        k = min(k, hi - 1)
        if np.any(w[lo:k] > 1e-9):
            parts = ((lo, k), (k, hi))
        else:
            parts = ((lo, k + 1), (k + 1, hi))
    else:
        wide = [i for i, (a, b) in enumerate(ranges) if b - a > 1]
        if not wide:
            return []
        g = wide[0]
        lo, hi = ranges[g]
        mid = (lo + hi) // 2
        parts = ((lo, mid), (mid, hi))
    return [ranges[:g] + (p,) + ranges[g + 1:] for p in parts if p[1] > p[0]]


class _BranchAndBound:
    def __init__(self, form: IntegerForm, node_limit: int, trace: list | None):
        self.form = form
        self.relax = _Relaxation(form)
        self.node_limit = node_limit
        self.trace = trace
        self.nodes = 0

    def _count(self, ranges, value):
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise ResourceLimitError(f"node limit {self.node_limit} reached")
        if self.trace is not None:
            self.trace.append((ranges, value))

    def greedy(self):
        form = self.form
        G = len(form.costs)
        partial = [0] * len(form.rows)
        choice = []
        for g in range(G):
            rest = [sum(min(row[h]) for h in range(g + 1, G)) for row in form.rows]
            order = sorted(range(len(form.costs[g])), key=lambda j: (form.costs[g][j], j))
            for j in order:
                if all(
                    partial[r] + row[g][j] + rest[r] <= b
                    for r, (row, b) in enumerate(zip(form.rows, form.bounds))
                ):
                    choice.append(j)
                    for r, row in enumerate(form.rows):
                        partial[r] += row[g][j]
                    break
            else:
                return None
        return tuple(choice)

    def dive(self):
        ranges = self.relax.full
        for _ in range(len(ranges) + 1):
            res = self.relax.solve(ranges)
            if res is None:
                return None
            _, weights = res
            if weights is None:
                return None
            choice = _integral_choice(weights)
            if choice is not None:
                return choice if self.form.feasible(choice) else None
            g = max(range(len(weights)), key=lambda i: (_fractional_mass(weights[i]), -i))
            k = int(np.argmax(weights[g]))
            ranges = ranges[:g] + ((k, k + 1),) + ranges[g + 1:]
        return None

    def best_bound(self):
        """Phase 1: ``(key, incumbent)`` of an optimal tuple by best-bound search.

        Among equal keys the lexicographically smaller tuple is kept, which
        gives phase 2 a tight starting point.
        """
        form, relax = self.form, self.relax
        root = relax.solve(relax.full)
        if root is None:
            return None, None
        incumbent = self.greedy() or self.dive()
        inc_key = form.key(incumbent) if incumbent is not None else None

        def offer(choice):
            nonlocal incumbent, inc_key
            key = form.key(choice)
            if inc_key is None or (key, choice) < (inc_key, incumbent):
                incumbent, inc_key = choice, key

        tick = count()
        heap = [(math.ceil(root[0]), next(tick), relax.full, root[1])]
        while heap:
            bound, _, ranges, weights = heapq.heappop(heap)
            if inc_key is not None and bound >= inc_key:
                break
            self._count(ranges, bound)
            choice = _integral_choice(weights) if weights is not None else None
            if choice is not None and form.feasible(choice):
                offer(choice)
                continue
            for child in _split(ranges, weights):
                if all(hi - lo == 1 for lo, hi in child):
                    leaf = tuple(lo for lo, _ in child)
                    if form.feasible(leaf):
                        offer(leaf)
                    continue
                res = relax.solve(child)
                if res is None:
                    continue
                lower = math.ceil(res[0])
                if inc_key is not None and lower >= inc_key:
                    continue
                heapq.heappush(heap, (lower, next(tick), child, res[1]))
        return inc_key, incumbent

    def lex_first(self, target: int, incumbent: tuple[int, ...]):
        """Phase 2: lexicographically first tuple whose key is ``target``.

        Depth-first with lower index ranges first, so leaves arrive in
        lexicographic order and the first one reaching ``target`` wins.
        Only tuples lexicographically below ``incumbent`` are searched.
        """
        form, relax = self.form, self.relax
        # tuples below the incumbent, as disjoint boxes in lexicographic order
        boxes = [
            tuple((j, j + 1) for j in incumbent[:g]) + ((0, incumbent[g]),) + relax.full[g + 1:]
            for g in range(len(incumbent))
            if incumbent[g] > 0
        ]
        stack = boxes[::-1]
        while stack:
            ranges = stack.pop()
            if all(hi - lo == 1 for lo, hi in ranges):
                leaf = tuple(lo for lo, _ in ranges)
                if form.feasible(leaf) and form.key(leaf) <= target:
                    return leaf
                continue
            if relax.separable_bound(ranges) > target or relax.quick_infeasible(ranges):
                continue
            res = relax.solve(ranges)
            if res is None:
                continue
            self._count(ranges, res[0])
            if math.ceil(res[0]) > target:
                continue
            g = next(i for i, (lo, hi) in enumerate(ranges) if hi - lo > 1)
            lo, hi = ranges[g]
            mid = (lo + hi) // 2
            stack.append(ranges[:g] + ((mid, hi),) + ranges[g + 1:])
            stack.append(ranges[:g] + ((lo, mid),) + ranges[g + 1:])
        return incumbent


def _solve_separable(form: IntegerForm):
    return tuple(min(range(len(c)), key=lambda j: (c[j], j)) for c in form.costs)


def _solve_dp(form: IntegerForm, backend=None):
    weights, capacity = form.rows[0], form.bounds[0]
    if capacity < 0:
        return None
    table = kernels.mckp_table(form.costs, weights, capacity, backend=backend)
    if kernels.is_unreachable(table[0][capacity]):
        return None
    choice, c = [], capacity
    for g, (costs, ws) in enumerate(zip(form.costs, weights)):
        target = table[g][c]
        for j, (v, w) in enumerate(zip(costs, ws)):
            if w <= c and not kernels.is_unreachable(table[g + 1][c - w]) and v + table[g + 1][c - w] == target:
                choice.append(j)
                c -= w
                break
        else:  # pragma: no cover - the table guarantees a completion
            raise OTLPError("knapsack reconstruction failed")
    return tuple(choice)


def _dp_applicable(form: IntegerForm) -> bool:
    return (
        len(form.rows) == 1
        and all(v >= 0 for c in form.rows[0] for v in c)
        and form.bounds[0] <= DP_CAPACITY_LIMIT
    )


def _finish(problem: SelectionProblem, choice, stats: SolverStats, certificate: str) -> Solution:
    if not problem.is_feasible(choice):
        raise OTLPError(f"internal error: selected tuple {choice} violates a coupling row")
    _recheck_specs(problem, choice)
    choices = tuple(
        Choice(problem.groups[g].subspace, j, problem.groups[g].candidates[j].threshold,
               problem.groups[g].candidates[j].row)
        for g, j in enumerate(choice)
    )
    return Solution(choices, problem.objective_value(choice), stats, certificate)


def _recheck_specs(problem: SelectionProblem, choice) -> None:
    """Re-validate against the declarative constraints, not the linear rows."""
    rows = [problem.groups[g].candidates[j].row for g, j in enumerate(choice)]
    if not problem.specs or any(r is None for r in rows):
        return
    for spec in problem.specs:
        if spec.scope == GLOBAL:
            ok = audit_value(spec, rows)[1]
        else:
            ok = all(
                satisfies(row, spec.metric, spec.op, spec.bound)
                for group, row in zip(problem.groups, rows)
                if spec.applies_to(group.subspace)
            )
        if not ok:
            raise OTLPError(f"internal error: selection violates {spec.label}")


def _infeasible(form: IntegerForm) -> InfeasibleError:
    which = ", ".join(form.labels)
    return InfeasibleError(
        f"no threshold tuple satisfies the coupling constraints ({which})",
        cause="coupling",
        constraint=form.labels[0] if len(form.labels) == 1 else None,
    )


def solve(
    problem: SelectionProblem,
    node_limit: int = DEFAULT_NODE_LIMIT,
    method: str | None = None,
    trace: list | None = None,
    backend: str | None = None,
) -> Solution:
    """Proved-optimal selection with the shared lexicographic tie-break.

    ``method`` forces ``"separable"``, ``"knapsack-dp"`` or
    ``"branch-and-bound"`` where applicable; ``trace`` collects
    ``(ranges, lp_value)`` for every branch-and-bound node explored.
    """
    start = time.perf_counter()
    form = integer_form(problem)
    if method is None:
        if not form.rows:
            method = "separable"
        elif _dp_applicable(form):
            method = "knapsack-dp"
        else:
            method = "branch-and-bound"
    log.debug("solving %d variables, %d coupling rows with %s", problem.n_variables, len(form.rows), method)

    nodes = lp_solves = lp_iters = 0
    if method == "separable":
        if form.rows:
            raise ValueError("separable method needs a problem without coupling rows")
        choice = _solve_separable(form)
    elif method == "knapsack-dp":
        if not _dp_applicable(form):
            raise ValueError("knapsack DP needs exactly one non-negative integer budget row")
        choice = _solve_dp(form, backend)
    elif method == "branch-and-bound":
        if not form.rows:
            choice = _solve_separable(form)
        else:
            bnb = _BranchAndBound(form, node_limit, trace)
            key, incumbent = bnb.best_bound()
            choice = bnb.lex_first(key, incumbent) if key is not None else None
            nodes, lp_solves, lp_iters = bnb.nodes, bnb.relax.solves, bnb.relax.iterations
    else:
        raise ValueError(f"unknown method {method!r}")
    if choice is None:
        raise _infeasible(form)
    stats = SolverStats(method, nodes, lp_solves, lp_iters, 0, time.perf_counter() - start)
    return _finish(problem, choice, stats, PROVED_OPTIMAL)


def solve_bruteforce(
    problem: SelectionProblem,
    tuple_limit: int = DEFAULT_TUPLE_LIMIT,
    backend: str | None = None,
) -> Solution:
    """Enumerate every tuple; same tie-break as :func:`solve`."""
    start = time.perf_counter()
    total = math.prod(problem.sizes)
    if total > tuple_limit:
        raise ResourceLimitError(f"{total} tuples exceed the limit of {tuple_limit}")
    form = integer_form(problem, check=False)
    _, choice, visited = kernels.enumerate_min(form.costs, form.rows, form.bounds, backend=backend)
    if choice is None:
        raise _infeasible(form)
    stats = SolverStats("enumeration", tuples=visited, wall_time=time.perf_counter() - start)
    return _finish(problem, choice, stats, ORACLE_VERIFIED)
