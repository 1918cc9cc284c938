import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from otlp import InputError, ScoredInstance, ThresholdGrid, build_grid, build_sensitivity, classify
from otlp.fixtures import TABLE2_COUNTS, TABLE2_FN_COST, TABLE2_FP_COST, table2_instances
from otlp.sensitivity import (
    DEFAULT_SUBSPACE,
    UNIQUE_SCORES,
    SensitivityTable,
    ThresholdRow,
    build_sensitivity_arrays,
)


@pytest.mark.parametrize("score,threshold,label", [(0.56, 0.5, 1), (0.4, 0.5, 0), (0.5, 0.5, 1), (0.0, 0.0, 1), (1.0, 1.0, 1)])
def test_classify_ge_rule(score, threshold, label):
    assert classify(score, threshold) == label


@pytest.mark.parametrize("score,threshold", [(-0.1, 0.5), (0.5, 1.5), (float("nan"), 0.5)])
def test_classify_rejects_out_of_range(score, threshold):
    with pytest.raises(InputError):
        classify(score, threshold)


def test_uniform_grid_quarter():
    assert build_grid("uniform", step="0.25").thresholds == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_default_grid_has_paper_thresholds():
    grid = build_grid()
    assert len(grid.thresholds) == 201
    for t in (0.245, 0.505, 0.905, 0.075, 0.2, 0.35, 0.71):
        assert t in grid.thresholds
    diffs = np.diff(grid.thresholds)
    assert np.allclose(diffs, 0.005, atol=1e-15)


def test_unique_scores_grid():
    inst = [ScoredInstance(s, 0) for s in (0.4, 0.56, 0.4)]
    assert build_grid(UNIQUE_SCORES, instances=inst).thresholds == (0.0, 0.4, 0.56)


@pytest.mark.parametrize("step", ["0", "-0.1", "1.5", "abc"])
def test_bad_step_rejected(step):
    with pytest.raises(InputError):
        build_grid("uniform", step=step)


def test_unique_scores_needs_instances():
    with pytest.raises(InputError):
        build_grid(UNIQUE_SCORES, instances=[])


def test_two_instance_hand_enumeration():
    inst = [ScoredInstance(0.9, 1), ScoredInstance(0.2, 0)]
    table = build_sensitivity(inst, ThresholdGrid((0.0, 0.5, 1.0), "custom"))[DEFAULT_SUBSPACE]
    got = [(r.threshold, r.tp, r.fp, r.tn, r.fn) for r in table.rows]
    assert got == [(0.0, 1, 1, 0, 0), (0.5, 1, 0, 1, 0), (1.0, 0, 0, 1, 1)]


def test_single_zero_threshold_saturates():
    rng = random.Random(3)
    inst = [ScoredInstance(rng.random(), rng.randint(0, 1)) for _ in range(50)]
    table = build_sensitivity(inst, ThresholdGrid((0.0,), "custom"))[DEFAULT_SUBSPACE]
    (row,) = table.rows
    assert (row.tp, row.fp) == (table.positive_count, table.negative_count)


def test_table2_fixture_counts_and_costs():
    grid = ThresholdGrid(tuple(t for t, *_ in TABLE2_COUNTS), "custom")
    table = build_sensitivity(table2_instances(), grid)[DEFAULT_SUBSPACE]
    assert (table.positive_count, table.negative_count) == (50, 100)
    for row, counts, fpc, fnc in zip(table.rows, TABLE2_COUNTS, TABLE2_FP_COST, TABLE2_FN_COST):
        assert (row.threshold, row.tp, row.fp, row.tn, row.fn) == counts
        assert (row.fp_cost, row.fn_cost) == (fpc, fnc)


def test_empty_input_rejected():
    with pytest.raises(InputError, match="no instances"):
        build_sensitivity([], build_grid())


def test_mixed_cost_presence_rejected():
    with pytest.raises(InputError):
        build_sensitivity([ScoredInstance(0.1, 1, cost=1), ScoredInstance(0.2, 0)], build_grid())


@pytest.mark.parametrize(
    "kwargs",
    [dict(score=1.2, label=1), dict(score=0.5, label=2), dict(score=0.5, label=0, cost=-1)],
)
def test_instance_validation(kwargs):
    with pytest.raises(InputError):
        ScoredInstance(**kwargs)


def test_validate_catches_broken_tables():
    good = SensitivityTable("a", (ThresholdRow(0.0, 2, 1, 0, 0), ThresholdRow(0.5, 1, 0, 1, 1)), 2, 1)
    good.validate()
    bad_sum = SensitivityTable("a", (ThresholdRow(0.0, 2, 1, 0, 0), ThresholdRow(0.5, 1, 0, 1, 0)), 2, 1)
    rising = SensitivityTable("a", (ThresholdRow(0.0, 1, 1, 0, 1), ThresholdRow(0.5, 2, 0, 1, 0)), 2, 1)
    unsaturated = SensitivityTable("a", (ThresholdRow(0.0, 1, 1, 0, 1),), 2, 1)
    for table in (bad_sum, rising, unsaturated):
        with pytest.raises(InputError):
            table.validate()


instances_st = st.lists(
    st.tuples(
        st.floats(0, 1, allow_nan=False),
        st.integers(0, 1),
        st.sampled_from(["a", "b", "c"]),
        st.integers(0, 1000),
    ),
    min_size=1,
    max_size=60,
)
grid_st = st.lists(st.floats(0, 1, allow_nan=False), max_size=12).map(
    lambda ts: ThresholdGrid(tuple(sorted({0.0, *ts})), "custom")
)


@given(instances_st, grid_st)
def test_matches_classify_loop(raw, grid):
    inst = [ScoredInstance(s, y, k, Fraction(c, 100)) for s, y, k, c in raw]
    tables = build_sensitivity(inst, grid)
    assert set(tables) == {i.subspace for i in inst}
    for key, table in tables.items():
        table.validate()
        members = [i for i in inst if i.subspace == key]
        for row in table.rows:
            cells = {"tp": 0, "fp": 0, "tn": 0, "fn": 0}
            costs = {k: Fraction(0) for k in cells}
            for i in members:
                pred = classify(i.score, row.threshold)
                cell = ("t" if pred == i.label else "f") + ("p" if pred else "n")
                cells[cell] += 1
                costs[cell] += i.cost
            assert (row.tp, row.fp, row.tn, row.fn) == (cells["tp"], cells["fp"], cells["tn"], cells["fn"])
            assert (row.tp_cost, row.fp_cost, row.tn_cost, row.fn_cost) == tuple(
                costs[k] for k in ("tp", "fp", "tn", "fn")
            )


@given(instances_st, grid_st)
def test_partition_sums_to_union(raw, grid):
    inst = [ScoredInstance(s, y, k) for s, y, k, _ in raw]
    parts = build_sensitivity(inst, grid)
    union = build_sensitivity([ScoredInstance(i.score, i.label) for i in inst], grid)[DEFAULT_SUBSPACE]
    for k, row in enumerate(union.rows):
        pooled = [sum(getattr(t.rows[k], f) for t in parts.values()) for f in ("tp", "fp", "tn", "fn")]
        assert pooled == [row.tp, row.fp, row.tn, row.fn]


def test_array_entry_point_matches_instances():
    rng = np.random.default_rng(0)
    scores = np.round(rng.random(500), 3)
    labels = (rng.random(500) < 0.3).astype(int)
    grid = build_grid()
    a = build_sensitivity_arrays(scores, labels, grid)
    b = build_sensitivity([ScoredInstance(float(s), int(y)) for s, y in zip(scores, labels)], grid)
    assert a == b
