"""Confusion-derived metrics evaluated on a single :class:`ThresholdRow`.

Every metric here is defined on the four counts (and, for the cost family,
the four cost sums) of one row. Ratios whose denominator vanishes are
*undefined*: :func:`evaluate` reports them as ``0.0`` and
:func:`evaluate_flagged` also returns ``defined=False``. Constraint checks
built on :func:`satisfies` treat an undefined value as a violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Sequence

from otlp._numeric import format_fraction, to_fraction
from otlp.errors import CostUnavailableError, InputError
from otlp.sensitivity import SensitivityTable, ThresholdRow

COUNT_METRICS = ("tp", "fp", "tn", "fn", "predicted_positive")
COST_METRICS = ("tp_cost", "fp_cost", "tn_cost", "fn_cost", "total_cost")
RATIO_METRICS = ("precision", "recall", "f_beta", "accuracy", "kappa")
ROOT_METRICS = ("mcc", "g_mean")
ALL_METRICS = COUNT_METRICS + COST_METRICS + RATIO_METRICS + ROOT_METRICS

# fp_cost + fn_cost: the misclassification cost
DEFAULT_COST_WEIGHTS = (Fraction(0), Fraction(1), Fraction(0), Fraction(1))


@dataclass(frozen=True)
class MetricKind:
    name: str
    beta: Fraction | None = None
    weights: tuple[Fraction, Fraction, Fraction, Fraction] | None = None

    def __post_init__(self):
        if self.name not in ALL_METRICS:
            raise InputError(f"unknown metric {self.name!r}")
        if self.name == "f_beta":
            if self.beta is None:
                raise InputError("f_beta needs a beta")
            beta = to_fraction(self.beta)
            if beta <= 0:
                raise InputError(f"beta must be positive, got {self.beta}")
            object.__setattr__(self, "beta", beta)
        elif self.beta is not None:
            raise InputError(f"{self.name} takes no beta")
        if self.name == "total_cost":
            weights = DEFAULT_COST_WEIGHTS if self.weights is None else self.weights
            if len(weights) != 4:
                raise InputError("total_cost needs exactly four weights")
            object.__setattr__(self, "weights", tuple(to_fraction(w) for w in weights))
        elif self.weights is not None:
            raise InputError(f"{self.name} takes no weights")

    @classmethod
    def f_beta(cls, beta) -> MetricKind:
        return cls("f_beta", beta=beta)

    @classmethod
    def total_cost(cls, weights=DEFAULT_COST_WEIGHTS) -> MetricKind:
        return cls("total_cost", weights=tuple(weights))

    @property
    def label(self) -> str:
        if self.name == "f_beta":
            if self.beta in (1, 2):
                return f"f{self.beta}"
            return f"fbeta:{format_fraction(self.beta)}"
        if self.name == "total_cost" and self.weights != DEFAULT_COST_WEIGHTS:
            return "total_cost:" + ",".join(format_fraction(w) for w in self.weights)
        return self.name

    @property
    def needs_cost(self) -> bool:
        return self.name in COST_METRICS

    @property
    def is_additive(self) -> bool:
        """Counts and cost sums add up across subspaces."""
        return self.name in COUNT_METRICS or self.name in COST_METRICS

    def __str__(self):
        return self.label


def parse_metric(text: str) -> MetricKind:
    """Read a metric name as used in configs and on the command line."""
    raw = text
    text = text.strip().lower()
    name, _, arg = text.partition(":")
    try:
        if name == "f1" and not arg:
            return MetricKind.f_beta(1)
        if name == "f2" and not arg:
            return MetricKind.f_beta(2)
        if name in ("fbeta", "f_beta"):
            return MetricKind.f_beta(to_fraction(arg))
        if name == "total_cost":
            if not arg:
                return MetricKind.total_cost()
            return MetricKind.total_cost(tuple(to_fraction(w) for w in arg.split(",")))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"bad metric argument in {raw!r}") from exc
    if arg:
        raise InputError(f"unknown metric {raw!r}")
    try:
        return MetricKind(name)
    except InputError:
        raise InputError(f"unknown metric {raw!r}") from None


def _ratio(num: int, den: int) -> Fraction | None:
    return Fraction(num, den) if den else None


def exact_value(row: ThresholdRow, kind: MetricKind) -> Fraction | None:
    """Exact value for every metric except mcc and g_mean; None if undefined."""
    name = kind.name
    if kind.needs_cost and not row.has_cost:
        raise CostUnavailableError(f"metric {kind.label} needs a cost column")
    tp, fp, tn, fn = row.tp, row.fp, row.tn, row.fn
    if name in ("tp", "fp", "tn", "fn"):
        return Fraction(getattr(row, name))
    if name == "predicted_positive":
        return Fraction(tp + fp)
    if name == "total_cost":
        w = kind.weights
        return w[0] * row.tp_cost + w[1] * row.fp_cost + w[2] * row.tn_cost + w[3] * row.fn_cost
    if name in COST_METRICS:
        return Fraction(getattr(row, name))
    if name == "precision":
        return _ratio(tp, tp + fp)
    if name == "recall":
        return _ratio(tp, tp + fn)
    if name == "accuracy":
        return _ratio(tp + tn, tp + fp + tn + fn)
    if name == "f_beta":
        if tp == 0:
            return None
        b2 = kind.beta * kind.beta
        return (1 + b2) * tp / ((1 + b2) * tp + b2 * fn + fp)
    if name == "kappa":
        if 0 in (tp + fp, fn + tn, tp + fn, fp + tn):
            return None
        n = tp + fp + tn + fn
        p_o = Fraction(tp + tn, n)
        p_e = Fraction((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn), n * n)
        return (p_o - p_e) / (1 - p_e)
    raise ValueError(f"{name} has no exact rational value")


def _mcc_parts(row: ThresholdRow):
    tp, fp, tn, fn = row.tp, row.fp, row.tn, row.fn
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return None
    return tp * tn - fp * fn, den


def _g_mean_square(row: ThresholdRow) -> Fraction | None:
    if row.tp + row.fn == 0 or row.tn + row.fp == 0:
        return None
    return Fraction(row.tp, row.tp + row.fn) * Fraction(row.tn, row.tn + row.fp)


def evaluate_flagged(row: ThresholdRow, kind: MetricKind) -> tuple[float, bool]:
    """``(value, defined)``; undefined values are reported as 0.0."""
    if kind.name == "mcc":
        parts = _mcc_parts(row)
        if parts is None:
            return 0.0, False
        num, den = parts
        return max(-1.0, min(1.0, num / math.sqrt(den))), True
    if kind.name == "g_mean":
        sq = _g_mean_square(row)
        if sq is None:
            return 0.0, False
        return min(1.0, math.sqrt(sq)), True
    value = exact_value(row, kind)
    if value is None:
        return 0.0, False
    return float(value), True


def evaluate(row: ThresholdRow, kind: MetricKind) -> float:
    return evaluate_flagged(row, kind)[0]


def _compare(lhs, op: str, rhs) -> bool:
    if op == "<=":
        return lhs <= rhs
    if op == ">=":
        return lhs >= rhs
    raise InputError(f"unknown comparison {op!r}")


def _signed_root_ge(num: int, den: int, bound: Fraction) -> bool:
    """num / sqrt(den) >= bound, decided without rounding (den > 0)."""
    if num >= 0:
        return bound <= 0 or num * num >= bound * bound * den
    return bound < 0 and num * num <= bound * bound * den


def satisfies(row: ThresholdRow, kind: MetricKind, op: str, bound) -> bool:
    """Exact test of ``metric(row) op bound``; undefined metrics fail."""
    bound = to_fraction(bound)
    if kind.name == "mcc":
        parts = _mcc_parts(row)
        if parts is None:
            return False
        num, den = parts
        if op == ">=":
            return _signed_root_ge(num, den, bound)
        if op == "<=":
            return _signed_root_ge(-num, den, -bound)
        raise InputError(f"unknown comparison {op!r}")
    if kind.name == "g_mean":
        sq = _g_mean_square(row)
        if sq is None:
            return False
        if op == ">=":
            return bound <= 0 or sq >= bound * bound
        if op == "<=":
            return bound >= 0 and sq <= bound * bound
        raise InputError(f"unknown comparison {op!r}")
    value = exact_value(row, kind)
    if value is None:
        return False
    return _compare(value, op, bound)


def annotate(table: SensitivityTable, kinds: Sequence[MetricKind]) -> SensitivityTable:
    """Append one derived column per metric, in request order."""
    if not kinds:
        return table
    columns = tuple((k.label, tuple(evaluate(r, k) for r in table.rows)) for k in kinds)
    return replace(table, metrics=table.metrics + columns)
