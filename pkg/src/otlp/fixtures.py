"""Synthetic inputs: the Table 2 example, random problems, imbalanced data.

Everything here is seeded and deterministic; tests and the ``fixture`` CLI
command build on it.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from otlp.model import GLOBAL, LOCAL, ConstraintSpec, ObjectiveSpec
from otlp.sensitivity import (
    DEFAULT_SUBSPACE,
    ScoredInstance,
    SensitivityTable,
    ThresholdGrid,
    ThresholdRow,
    build_sensitivity,
)

# threshold, tp, fp, tn, fn
TABLE2_COUNTS = (
    (0.05, 48, 15, 85, 2),
    (0.1, 45, 10, 90, 5),
    (0.35, 40, 5, 95, 10),
    (0.55, 35, 3, 97, 15),
    (0.71, 30, 2, 98, 20),
)
TABLE2_PRECISION = (0.762, 0.818, 0.889, 0.921, 0.937)
TABLE2_RECALL = (0.960, 0.900, 0.800, 0.700, 0.600)
TABLE2_F1 = (0.849, 0.857, 0.842, 0.796, 0.731)
TABLE2_TOTAL_COST = (160, 125, 100, 105, 120)

# one monotone split of the cost column into fp_cost + fn_cost
TABLE2_FP_COST = (150, 115, 90, 90, 90)
TABLE2_FN_COST = (10, 10, 10, 15, 30)


def table2_table(with_cost: bool = True) -> SensitivityTable:
    rows = []
    for (t, tp, fp, tn, fn), fpc, fnc in zip(TABLE2_COUNTS, TABLE2_FP_COST, TABLE2_FN_COST):
        if with_cost:
            rows.append(ThresholdRow(t, tp, fp, tn, fn, Fraction(0), Fraction(fpc), Fraction(0), Fraction(fnc), True))
        else:
            rows.append(ThresholdRow(t, tp, fp, tn, fn))
    return SensitivityTable(DEFAULT_SUBSPACE, tuple(rows), 50, 100, with_cost)


def table2_instances() -> list[ScoredInstance]:
    """150 instances whose sensitivity at the Table 2 thresholds is Table 2.

    Scores sit strictly between consecutive thresholds, so any grid that
    contains the five thresholds reproduces the five rows. Per-instance
    costs reproduce the fp_cost / fn_cost split above.
    """
    # score band, positives (cost each), negatives (cost each)
    bands = [
        (0.01, [5, 5], [0] * 85),
        (0.07, [0] * 3, [7] * 5),
        (0.2, [0] * 5, [5] * 5),
        (0.45, [1] * 5, [0] * 2),
        (0.6, [3] * 5, [0]),
        (0.9, [0] * 30, [45, 45]),
    ]
    out = []
    for score, pos, neg in bands:
        out.extend(ScoredInstance(score, 1, cost=Fraction(c)) for c in pos)
        out.extend(ScoredInstance(score, 0, cost=Fraction(c)) for c in neg)
    return out


def random_instances(
    rng: random.Random,
    n: int,
    subspaces=(DEFAULT_SUBSPACE,),
    with_cost: bool = False,
    decimals: int = 3,
) -> list[ScoredInstance]:
    out = []
    for _ in range(n):
        label = 1 if rng.random() < 0.3 else 0
        mu = 0.65 if label else 0.35
        score = min(1.0, max(0.0, round(rng.gauss(mu, 0.2), decimals)))
        cost = Fraction(rng.randint(0, 500), 100) if with_cost else None
        out.append(ScoredInstance(score, label, rng.choice(list(subspaces)), cost))
    return out


def random_tables(rng: random.Random, n_groups: int, max_rows: int, with_cost: bool = True):
    """Random sensitivity tables built from random instances on random grids."""
    keys = [f"s{g}" for g in range(n_groups)]
    n = rng.randint(10 * n_groups, 80 * n_groups)
    instances = random_instances(rng, n, keys, with_cost)
    # every subspace needs at least one instance
    for k in keys:
        instances.append(ScoredInstance(round(rng.random(), 3), rng.randint(0, 1), k,
                                        Fraction(rng.randint(0, 500), 100) if with_cost else None))
    size = rng.randint(1, max_rows)
    grid = sorted({0.0, *(round(rng.random(), 3) for _ in range(size - 1))})
    tables = build_sensitivity(instances, ThresholdGrid(tuple(grid), "custom"))
    return list(tables.values())


def random_fraction(rng: random.Random, lo: float = 0.0, hi: float = 1.0, den: int = 100) -> Fraction:
    return Fraction(rng.randint(int(lo * den), int(hi * den)), den)


OBJECTIVES = (
    ("f1", "maximize"),
    ("f2", "maximize"),
    ("fbeta:0.5", "maximize"),
    ("precision", "maximize"),
    ("recall", "maximize"),
    ("accuracy", "maximize"),
    ("kappa", "maximize"),
    ("mcc", "maximize"),
    ("g_mean", "maximize"),
    ("fn_cost", "minimize"),
    ("total_cost", "minimize"),
    ("total_cost:1,2,0.5,3", "minimize"),
    ("tp", "maximize"),
    ("fp", "minimize"),
)


def random_problem_spec(rng: random.Random, tables, max_coupling: int = 3, local: bool = True):
    """A random objective plus local and global constraints over ``tables``."""
    metric, direction = rng.choice(OBJECTIVES)
    objective = ObjectiveSpec(metric, direction)
    constraints = []
    if local and rng.random() < 0.5:
        t = rng.choice(tables)
        kind = rng.choice(["precision", "recall", "f1", "mcc", "g_mean", "predicted_positive"])
        if kind == "predicted_positive":
            bound = Fraction(rng.randint(0, t.positive_count + t.negative_count))
            op = "<="
        else:
            bound = random_fraction(rng, 0.0, 0.8)
            op = ">="
        sub = t.subspace if rng.random() < 0.5 else None
        constraints.append(ConstraintSpec(kind, op, bound, LOCAL, sub))
    total_pp_max = sum(max(r.predicted_positive for r in t.rows) for t in tables)
    for _ in range(rng.randint(0, max_coupling)):
        kind = rng.choice(["budget", "budget", "precision", "recall", "fn_cost", "tp"])
        if kind == "budget":
            constraints.append(
                ConstraintSpec("predicted_positive", "<=", Fraction(rng.randint(0, total_pp_max)), GLOBAL)
            )
        elif kind in ("precision", "recall"):
            op = ">=" if rng.random() < 0.8 else "<="
            constraints.append(ConstraintSpec(kind, op, random_fraction(rng, 0.2, 0.95), GLOBAL))
        elif kind == "fn_cost":
            top = sum(max(r.fn_cost for r in t.rows) for t in tables)
            constraints.append(ConstraintSpec("fn_cost", "<=", random_fraction(rng, 0, float(top) + 1), GLOBAL))
        else:
            top = sum(t.positive_count for t in tables)
            constraints.append(ConstraintSpec("tp", ">=", Fraction(rng.randint(0, top)), GLOBAL))
    return objective, constraints


def imbalanced_dataset(seed: int, n: int = 30_000, positive_rate: float = 0.01, separation: float = 2.5):
    """Scores from a fixed rule: the calibrated posterior of a Gaussian model.

    Feature ``x ~ N(0, 1)`` for negatives and ``N(separation, 1)`` for
    positives; the score is ``P(y=1 | x)`` under the true prior, which pushes
    almost every positive below 0.5 when positives are rare.
    """
    rng = np.random.default_rng(seed)
    labels = (rng.random(n) < positive_rate).astype(np.int64)
    x = rng.normal(0.0, 1.0, n) + separation * labels
    log_odds = np.log(positive_rate / (1 - positive_rate)) + separation * x - separation**2 / 2
    scores = 1.0 / (1.0 + np.exp(-log_odds))
    return np.round(scores, 6), labels


def sawtooth_table(teeth: int = 12, depth: int = 40) -> SensitivityTable:
    """Single table whose misclassification cost zig-zags across thresholds.

    Every tooth bottom is a strict local minimum; the deepest one sits in
    the middle of the grid. All teeth share one peak height, so descent
    from inside another tooth never crosses into the deepest one.
    """
    peak = 130
    totals = []
    best = teeth // 2
    for k in range(teeth):
        bottom = 100 - (depth if k == best else (k * 7) % 23)
        mid = (peak + bottom) // 2
        totals.extend([peak, mid, bottom, mid])
    totals.append(totals[0])
    # split totals into monotone fp_cost (down) and fn_cost (up)
    fn_cost = [0]
    for a, b in zip(totals, totals[1:]):
        fn_cost.append(fn_cost[-1] + max(0, b - a))
    drop = sum(max(0, a - b) for a, b in zip(totals, totals[1:]))
    fp_cost = [t - f + drop for t, f in zip(totals, fn_cost)]
    n = len(totals)
    rows = []
    for i in range(n):
        t = i / n
        tp = n - i
        fp = n - i
        rows.append(
            ThresholdRow(t, tp, fp, i, i, Fraction(0), Fraction(fp_cost[i]), Fraction(0), Fraction(fn_cost[i]), True)
        )
    return SensitivityTable("saw", tuple(rows), n, n, True)
