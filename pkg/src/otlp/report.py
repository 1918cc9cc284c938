"""JSON run reports built from a solution and the tables it came from.

Reports are plain dicts with JSON-safe values; :func:`dumps` fixes key
order and formatting so equal inputs give byte-equal files. Wall-clock
time is deliberately left out for the same reason.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from otlp._numeric import json_number
from otlp.errors import InfeasibleError
from otlp.metrics import MetricKind, evaluate_flagged, exact_value
from otlp.model import GLOBAL, ConstraintSpec, audit_value
from otlp.sensitivity import SensitivityTable, ThresholdRow
from otlp.solver import Solution

COST_FIELDS = ("tp_cost", "fp_cost", "tn_cost", "fn_cost")


def dumps(report: Mapping) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


def report_metric_kinds(objective, constraints: Sequence[ConstraintSpec], extra=()) -> list[MetricKind]:
    """Objective metric, then constraint metrics, then extras; no repeats."""
    kinds: list[MetricKind] = []
    for kind in (objective.metric, *(c.metric for c in constraints), *extra):
        if kind not in kinds:
            kinds.append(kind)
    return kinds


def _metric_values(row: ThresholdRow, kinds, has_cost: bool) -> dict:
    out = {}
    for kind in kinds:
        if kind.needs_cost and not has_cost:
            continue
        if kind.is_additive:
            out[kind.label] = json_number(exact_value(row, kind))
            continue
        value, defined = evaluate_flagged(row, kind)
        out[kind.label] = value if defined else None
    return out


def _slack(spec: ConstraintSpec, value) -> float | None:
    if value is None:
        return None
    diff = Fraction(value) - spec.bound if not isinstance(value, float) else value - float(spec.bound)
    if spec.op == "<=":
        diff = -diff
    return float(diff)


def audit(
    constraints: Sequence[ConstraintSpec],
    selected: Mapping[Hashable, ThresholdRow],
) -> list[dict]:
    """One entry per global constraint and per (local constraint, subspace)."""
    entries = []
    for spec in constraints:
        if spec.scope == GLOBAL:
            targets = [(None, list(selected.values()))]
        else:
            targets = [(key, [row]) for key, row in selected.items() if spec.applies_to(key)]
        for key, rows in targets:
            value, ok = audit_value(spec, rows)
            entries.append({
                "constraint": spec.label,
                "scope": spec.scope,
                "subspace": None if key is None else str(key),
                "value": json_number(value) if value is not None else None,
                "slack": _slack(spec, value),
                "satisfied": bool(ok),
            })
    return entries


def _subspace_entry(table: SensitivityTable, row: ThresholdRow, kinds) -> dict:
    entry = {
        "threshold": row.threshold,
        "tp": row.tp,
        "fp": row.fp,
        "tn": row.tn,
        "fn": row.fn,
        "metrics": _metric_values(row, kinds, table.has_cost),
    }
    if table.has_cost:
        entry["costs"] = {name: json_number(getattr(row, name)) for name in COST_FIELDS}
    return entry


def success_report(
    config_echo: Mapping,
    tables: Mapping[Hashable, SensitivityTable],
    solution: Solution,
    objective,
    constraints: Sequence[ConstraintSpec],
    extra_metrics=(),
) -> dict:
    kinds = report_metric_kinds(objective, constraints, extra_metrics)
    selected = {c.subspace: c.row for c in solution.choices}
    subspaces = {
        str(key): _subspace_entry(tables[key], row, kinds) for key, row in selected.items()
    }
    thresholds = {str(key): row.threshold for key, row in selected.items()}
    stats = solution.stats
    report = {
        "status": "optimal",
        "certificate": solution.certificate,
        "config": dict(config_echo),
        "objective": {
            "metric": objective.metric.label,
            "direction": objective.direction,
            "value": json_number(solution.objective_value),
        },
        "subspaces": subspaces,
        "thresholds": thresholds,
        "constraint_audit": audit(constraints, selected),
        "solver": {
            "method": stats.method,
            "nodes": stats.nodes,
            "lp_solves": stats.lp_solves,
            "lp_iterations": stats.lp_iterations,
        },
    }
    if len(thresholds) == 1:
        report["threshold"] = next(iter(thresholds.values()))
    return report


def infeasible_report(config_echo: Mapping, error: InfeasibleError) -> dict:
    return {
        "status": "infeasible",
        "certificate": "none",
        "config": dict(config_echo),
        "infeasibility": {
            "cause": error.cause,
            "subspace": None if error.subspace is None else str(error.subspace),
            "constraint": error.constraint,
            "message": str(error),
        },
    }
