import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from otlp import InputError, MetricKind, annotate, evaluate, parse_metric
from otlp.fixtures import TABLE2_F1, TABLE2_PRECISION, TABLE2_RECALL, table2_table
from otlp.metrics import evaluate_flagged, exact_value, satisfies
from otlp.sensitivity import ThresholdRow


def row(tp, fp, tn, fn, **costs):
    return ThresholdRow(0.5, tp, fp, tn, fn, has_cost=bool(costs), **costs)


F1 = parse_metric("f1")
F2 = parse_metric("f2")


def test_table2_first_row():
    r = row(48, 15, 85, 2)
    assert evaluate(r, parse_metric("precision")) == pytest.approx(0.762, abs=1e-3)
    assert evaluate(r, parse_metric("recall")) == pytest.approx(0.960, abs=1e-3)
    assert evaluate(r, F1) == pytest.approx(0.849, abs=1e-3)


def test_f2_on_second_row():
    p, r = 45 / 55, 45 / 50
    expected = 5 * p * r / (4 * p + r)
    assert evaluate(row(45, 10, 90, 5), F2) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.8824, abs=5e-4)


def test_zero_denominator_is_zero_and_flagged():
    r = row(0, 0, 10, 0)
    assert evaluate_flagged(r, parse_metric("precision")) == (0.0, False)
    assert not satisfies(r, parse_metric("precision"), "<=", 1)
    assert not satisfies(r, parse_metric("precision"), ">=", 0)


def test_degenerate_kappa_and_mcc_flagged():
    r = row(5, 5, 0, 0)
    for name in ("kappa", "mcc"):
        assert evaluate_flagged(r, parse_metric(name)) == (0.0, False)


def test_annotate_reproduces_table2_columns():
    kinds = [parse_metric(k) for k in ("precision", "recall", "f1")]
    table = annotate(table2_table(), kinds)
    assert [name for name, _ in table.metrics] == ["precision", "recall", "f1"]
    for name, printed in zip(("precision", "recall", "f1"), (TABLE2_PRECISION, TABLE2_RECALL, TABLE2_F1)):
        for got, want in zip(table.column(name), printed):
            assert got == pytest.approx(want, abs=1e-3)


def test_annotate_empty_is_identity():
    table = table2_table()
    assert annotate(table, []) is table


def test_total_cost_column_with_synthetic_costs():
    table = table2_table()
    kind = parse_metric("total_cost")
    assert [exact_value(r, kind) for r in table.rows] == [160, 125, 100, 105, 120]
    weighted = parse_metric("total_cost:1,2,0.5,3")
    r = row(1, 2, 3, 4, tp_cost=Fraction(1), fp_cost=Fraction(2), tn_cost=Fraction(3), fn_cost=Fraction(4))
    assert exact_value(r, weighted) == 1 + 4 + Fraction(3, 2) + 12


@pytest.mark.parametrize(
    "text,label",
    [("F1", "f1"), ("f2", "f2"), ("fbeta:0.5", "fbeta:0.5"), ("fbeta:1", "f1"), ("total_cost", "total_cost"),
     ("total_cost:1,1,1,1", "total_cost:1,1,1,1"), ("predicted_positive", "predicted_positive"), ("g_mean", "g_mean")],
)
def test_parse_metric_labels(text, label):
    assert parse_metric(text).label == label


@pytest.mark.parametrize("text", ["f3x", "fbeta:-1", "fbeta:abc", "total_cost:1,2", "precision:2", ""])
def test_parse_metric_rejects(text):
    with pytest.raises(InputError):
        parse_metric(text)


counts = st.tuples(*(st.integers(0, 60) for _ in range(4))).filter(lambda c: sum(c) > 0)


@given(counts)
def test_ranges(c):
    r = row(*c)
    for name in ("precision", "recall", "f1", "f2", "accuracy", "g_mean"):
        assert 0 <= evaluate(r, parse_metric(name)) <= 1
    for name in ("kappa", "mcc"):
        assert -1 <= evaluate(r, parse_metric(name)) <= 1


@given(counts)
def test_f1_is_harmonic_mean(c):
    r = row(*c)
    p, dp = evaluate_flagged(r, parse_metric("precision"))
    rc, dr = evaluate_flagged(r, parse_metric("recall"))
    assume(dp and dr and p + rc > 0)
    assert evaluate(r, F1) == pytest.approx(2 * p * rc / (p + rc), rel=1e-12)


@given(counts)
def test_fbeta_limits(c):
    r = row(*c)
    assume(r.tp > 0)
    assert evaluate(r, MetricKind.f_beta(100)) == pytest.approx(evaluate(r, parse_metric("recall")), abs=1e-3)
    assert evaluate(r, MetricKind.f_beta(Fraction(1, 100))) == pytest.approx(
        evaluate(r, parse_metric("precision")), abs=1e-3
    )


@given(counts)
def test_mcc_swap_symmetry(c):
    tp, fp, tn, fn = c
    mcc = parse_metric("mcc")
    assert evaluate(row(tp, fp, tn, fn), mcc) == pytest.approx(evaluate(row(tn, fn, tp, fp), mcc), abs=1e-12)


@given(st.integers(1, 50), st.integers(1, 50))
def test_perfect_classifier(tp, tn):
    r = row(tp, 0, tn, 0)
    for name in ("precision", "recall", "f1", "f2", "accuracy", "g_mean", "kappa", "mcc"):
        assert evaluate(r, parse_metric(name)) == pytest.approx(1.0)


@given(counts)
def test_kappa_formula(c):
    tp, fp, tn, fn = c
    n = tp + fp + tn + fn
    po = (tp + tn) / n
    pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / n**2
    value, defined = evaluate_flagged(row(*c), parse_metric("kappa"))
    if defined:
        assert value == pytest.approx((po - pe) / (1 - pe), abs=1e-9)


bounds = st.fractions(min_value=-1, max_value=1, max_denominator=50)


@given(counts, bounds, st.sampled_from(["<=", ">="]), st.sampled_from(["mcc", "g_mean"]))
def test_root_metric_satisfies_agrees_with_float(c, bound, op, name):
    kind = parse_metric(name)
    r = row(*c)
    value, defined = evaluate_flagged(r, kind)
    got = satisfies(r, kind, op, bound)
    if not defined:
        assert not got
        return
    # exact decision must agree with floating point away from the boundary
    gap = value - float(bound)
    if abs(gap) > 1e-9:
        assert got == (gap >= 0 if op == ">=" else gap <= 0)


@given(counts, bounds, st.sampled_from(["<=", ">="]))
def test_exact_ratio_satisfies(c, bound, op):
    kind = parse_metric("precision")
    r = row(*c)
    value = exact_value(r, kind)
    got = satisfies(r, kind, op, bound)
    assert got == (value is not None and (value >= bound if op == ">=" else value <= bound))


def test_counts_and_cost_values_exact():
    r = row(3, 2, 1, 4, tp_cost=Fraction(1, 3), fp_cost=Fraction(0), tn_cost=Fraction(0), fn_cost=Fraction(2))
    assert exact_value(r, parse_metric("predicted_positive")) == 5
    assert exact_value(r, parse_metric("tp_cost")) == Fraction(1, 3)
    assert math.isclose(evaluate(r, parse_metric("fn_cost")), 2.0)
