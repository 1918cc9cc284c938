"""Per-subspace sensitivity tables: confusion counts and cost sums per threshold."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import accumulate
from typing import Hashable, Iterable, Sequence

import numpy as np

from otlp._numeric import lcm_of_denominators, to_fraction
from otlp.errors import InputError

DEFAULT_SUBSPACE = "default"
DEFAULT_STEP = Fraction(1, 200)

UNIFORM = "uniform"
UNIQUE_SCORES = "unique-scores"


def _check_unit(value, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be a number, got {value!r}") from exc
    if not (0.0 <= value <= 1.0):
        raise InputError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def subspace_order(key):
    """Sort key placing integer subspaces before text ones."""
    return (isinstance(key, str), key)


@dataclass(frozen=True)
class ScoredInstance:
    score: float
    label: int
    subspace: Hashable = DEFAULT_SUBSPACE
    cost: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "score", _check_unit(self.score, "score"))
        if self.label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {self.label!r}")
        object.__setattr__(self, "label", int(self.label))
        if self.cost is not None:
            try:
                cost = to_fraction(self.cost)
            except (TypeError, ValueError) as exc:
                raise InputError(f"cost must be a number, got {self.cost!r}") from exc
            if cost < 0:
                raise InputError(f"cost must be non-negative, got {self.cost!r}")
            object.__setattr__(self, "cost", cost)


@dataclass(frozen=True)
class ThresholdGrid:
    thresholds: tuple[float, ...]
    mode: str = UNIFORM
    step: Fraction | None = None

    def __post_init__(self):
        ts = tuple(float(t) for t in self.thresholds)
        if not ts:
            raise InputError("threshold grid is empty")
        for t in ts:
            _check_unit(t, "threshold")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InputError("thresholds must be strictly increasing")
        object.__setattr__(self, "thresholds", ts)

    def __len__(self):
        return len(self.thresholds)

    def __iter__(self):
        return iter(self.thresholds)


@dataclass(frozen=True)
class ThresholdRow:
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    tp_cost: Fraction = Fraction(0)
    fp_cost: Fraction = Fraction(0)
    tn_cost: Fraction = Fraction(0)
    fn_cost: Fraction = Fraction(0)
    has_cost: bool = False

    @property
    def predicted_positive(self) -> int:
        return self.tp + self.fp

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class SensitivityTable:
    """Rows ordered by ascending threshold for one subspace.

    ``metrics`` holds derived columns added by :func:`otlp.metrics.annotate`
    as ``(label, values)`` pairs.
    """

    subspace: Hashable
    rows: tuple[ThresholdRow, ...]
    positive_count: int
    negative_count: int
    has_cost: bool = False
    metrics: tuple[tuple[str, tuple[float, ...]], ...] = field(default=(), compare=False)

    @property
    def thresholds(self) -> tuple[float, ...]:
        return tuple(r.threshold for r in self.rows)

    def column(self, label: str) -> tuple[float, ...]:
        for name, values in self.metrics:
            if name == label:
                return values
        raise KeyError(label)

    def validate(self) -> None:
        """Raise InputError unless every table invariant holds exactly."""
        where = f"subspace {self.subspace!r}"
        if not self.rows:
            raise InputError(f"{where}: table has no rows")
        if self.positive_count + self.negative_count == 0:
            raise InputError(f"{where}: table covers no instances")
        prev = None
        for row in self.rows:
            if min(row.tp, row.fp, row.tn, row.fn) < 0:
                raise InputError(f"{where}, threshold {row.threshold}: negative count")
            if row.tp + row.fn != self.positive_count or row.fp + row.tn != self.negative_count:
                raise InputError(
                    f"{where}, threshold {row.threshold}: tp+fn and fp+tn must be constant "
                    f"({self.positive_count} positives, {self.negative_count} negatives)"
                )
            if self.has_cost and min(row.tp_cost, row.fp_cost, row.tn_cost, row.fn_cost) < 0:
                raise InputError(f"{where}, threshold {row.threshold}: negative cost")
            if row.threshold == 0.0 and (row.tp, row.fp) != (self.positive_count, self.negative_count):
                raise InputError(f"{where}: threshold 0 must classify every instance positive")
            if prev is not None:
                if row.threshold <= prev.threshold:
                    raise InputError(f"{where}: thresholds must be strictly increasing")
                if row.tp > prev.tp or row.fp > prev.fp:
                    raise InputError(f"{where}, threshold {row.threshold}: tp and fp must not increase")
                if self.has_cost and (
                    row.tp_cost > prev.tp_cost
                    or row.fp_cost > prev.fp_cost
                    or row.tn_cost < prev.tn_cost
                    or row.fn_cost < prev.fn_cost
                ):
                    raise InputError(
                        f"{where}, threshold {row.threshold}: cost sums must move with the counts"
                    )
            prev = row


def classify(score: float, threshold: float) -> int:
    """1 when ``score >= threshold``; ties go to the positive class."""
    score = _check_unit(score, "score")
    threshold = _check_unit(threshold, "threshold")
    return 1 if score >= threshold else 0


def build_grid(
    mode: str = UNIFORM,
    step=None,
    instances: Iterable[ScoredInstance] | None = None,
) -> ThresholdGrid:
    """Candidate thresholds, either a uniform lattice or the distinct scores.

    >>> build_grid(UNIFORM, step="0.25").thresholds
    (0.0, 0.25, 0.5, 0.75, 1.0)
    """
    if mode == UNIFORM:
        step = DEFAULT_STEP if step is None else step
        try:
            step = to_fraction(step)
        except (TypeError, ValueError) as exc:
            raise InputError(f"grid step must be a number, got {step!r}") from exc
        if not (0 < step <= 1):
            raise InputError(f"grid step must satisfy 0 < step <= 1, got {step}")
        count = math.floor(1 / step)
        values = [float(k * step) for k in range(count + 1)]
        if values[-1] < 1.0:
            values.append(1.0)
        return ThresholdGrid(tuple(values), UNIFORM, step)
    if mode == UNIQUE_SCORES:
        scores = sorted({inst.score for inst in instances or ()})
        if not scores:
            raise InputError("unique-scores grid needs at least one instance")
        if scores[0] != 0.0:
            scores.insert(0, 0.0)
        return ThresholdGrid(tuple(scores), UNIQUE_SCORES)
    raise InputError(f"unknown grid mode {mode!r}")


def build_sensitivity(
    instances: Sequence[ScoredInstance], grid: ThresholdGrid
) -> dict[Hashable, SensitivityTable]:
    """One table per subspace present in ``instances``."""
    if not instances:
        raise InputError("no instances")
    has_cost = instances[0].cost is not None
    if any((inst.cost is not None) != has_cost for inst in instances):
        raise InputError("cost must be given for every instance or for none")
    return build_sensitivity_arrays(
        [i.score for i in instances],
        [i.label for i in instances],
        grid,
        subspaces=[i.subspace for i in instances],
        costs=[i.cost for i in instances] if has_cost else None,
    )


def build_sensitivity_arrays(
    scores, labels, grid: ThresholdGrid, subspaces=None, costs=None
) -> dict[Hashable, SensitivityTable]:
    """Array form of :func:`build_sensitivity`; inputs are assumed validated.

    Each subspace is sorted once per class and every grid threshold is
    located by binary search, so the cost is O(n log n + |grid| log n).
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(scores)
    if n == 0:
        raise InputError("no instances")
    if subspaces is None:
        subspaces = [DEFAULT_SUBSPACE] * n
    members: dict[Hashable, list[int]] = {}
    for i, key in enumerate(subspaces):
        members.setdefault(key, []).append(i)

    cost_ints = None
    scale = 1
    if costs is not None:
        fracs = [to_fraction(c) for c in costs]
        scale = lcm_of_denominators(fracs)
        cost_ints = [int(c * scale) for c in fracs]

    thresholds = np.asarray(grid.thresholds, dtype=float)
    tables = {}
    for key in sorted(members, key=subspace_order):
        idx = np.asarray(members[key], dtype=np.int64)
        tables[key] = _table_for(key, idx, scores, labels, thresholds, cost_ints, scale)
    return tables


def _table_for(key, idx, scores, labels, thresholds, cost_ints, scale) -> SensitivityTable:
    sub_scores = scores[idx]
    sub_labels = labels[idx]
    pos_idx = np.flatnonzero(sub_labels == 1)
    neg_idx = np.flatnonzero(sub_labels == 0)
    pos_idx = pos_idx[np.argsort(sub_scores[pos_idx], kind="stable")]
    neg_idx = neg_idx[np.argsort(sub_scores[neg_idx], kind="stable")]
    n_pos, n_neg = len(pos_idx), len(neg_idx)

    # count of each class strictly below t
    fn = np.searchsorted(sub_scores[pos_idx], thresholds, side="left")
    tn = np.searchsorted(sub_scores[neg_idx], thresholds, side="left")

    has_cost = cost_ints is not None
    if has_cost:
        pos_costs = [cost_ints[idx[i]] for i in pos_idx]
        neg_costs = [cost_ints[idx[i]] for i in neg_idx]
        cum_pos = [0, *accumulate(pos_costs)]
        cum_neg = [0, *accumulate(neg_costs)]

    rows = []
    for k, t in enumerate(thresholds):
        f, n = int(fn[k]), int(tn[k])
        if has_cost:
            fn_c, tn_c = cum_pos[f], cum_neg[n]
            costs = dict(
                tp_cost=Fraction(cum_pos[-1] - fn_c, scale),
                fp_cost=Fraction(cum_neg[-1] - tn_c, scale),
                tn_cost=Fraction(tn_c, scale),
                fn_cost=Fraction(fn_c, scale),
            )
        else:
            costs = {}
        rows.append(
            ThresholdRow(float(t), n_pos - f, n_neg - n, n, f, has_cost=has_cost, **costs)
        )
    return SensitivityTable(key, tuple(rows), n_pos, n_neg, has_cost)
