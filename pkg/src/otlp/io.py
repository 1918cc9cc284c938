"""File formats: scored-instance CSV, sensitivity sheets and run configs.

Raw score files need a header with ``score`` and ``label`` columns and may
add ``subspace`` (kept verbatim as text) and ``cost``. Sensitivity sheets
use the columns in :data:`SHEET_COLUMNS` followed by any metric columns;
blank cost cells mean the sheet carries no cost data.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Hashable, Iterable, Mapping, Sequence

from otlp._numeric import format_fraction, to_fraction
from otlp.errors import InputError, ParseError
from otlp.metrics import MetricKind, evaluate_flagged, exact_value, parse_metric
from otlp.model import LOCAL, MINIMIZE, ConstraintSpec, ObjectiveSpec
from otlp.sensitivity import (
    DEFAULT_SUBSPACE,
    UNIFORM,
    UNIQUE_SCORES,
    ScoredInstance,
    SensitivityTable,
    ThresholdRow,
    subspace_order,
)

RAW = "raw"
SHEET = "sheet"

COUNT_COLUMNS = ("tp", "fp", "tn", "fn")
COST_COLUMNS = ("tp_cost", "fp_cost", "tn_cost", "fn_cost")
SHEET_COLUMNS = ("subspace", "threshold", *COUNT_COLUMNS, *COST_COLUMNS)


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _rows(text: str):
    """Header plus ``(line_number, record)`` pairs, skipping blank lines."""
    reader = csv.reader(io.StringIO(text))
    header = None
    records = []
    for record in reader:
        if not record or all(not cell.strip() for cell in record):
            continue
        if header is None:
            header = [cell.strip().lower() for cell in record]
            header_line = reader.line_num
            continue
        records.append((reader.line_num, record))
    if header is None:
        raise InputError("no instances")
    if len(set(header)) != len(header):
        raise ParseError("duplicate column in header", header_line)
    return header, records


def detect_format(text: str) -> str:
    """``"sheet"`` when the header has confusion-count columns, else ``"raw"``."""
    header, _ = _rows(text)
    if {"threshold", *COUNT_COLUMNS} <= set(header):
        return SHEET
    if {"score", "label"} <= set(header):
        return RAW
    raise ParseError("header matches neither a score file nor a sensitivity sheet", 1)


def _cell(record, index: int, line: int, name: str) -> str:
    if index >= len(record):
        raise ParseError(f"missing value for {name}", line)
    return record[index].strip()


def parse_instances(text: str) -> list[ScoredInstance]:
    """Parse score CSV text into instances."""
    header, records = _rows(text)
    missing = [c for c in ("score", "label") if c not in header]
    if missing:
        raise ParseError(f"header lacks required column(s): {', '.join(missing)}", 1)
    col = {name: i for i, name in enumerate(header)}
    has_sub = "subspace" in col
    has_cost = "cost" in col
    out = []
    for line, record in records:
        if len(record) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(record)}", line)
        text = _cell(record, col["score"], line, "score")
        try:
            score = float(text)
        except ValueError:
            raise ParseError(f"score {text!r} is not a number", line) from None
        label_text = _cell(record, col["label"], line, "label")
        if label_text not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, got {label_text!r}", line)
        subspace = record[col["subspace"]] if has_sub else DEFAULT_SUBSPACE
        if has_sub and subspace == "":
            raise ParseError("empty subspace", line)
        cost = None
        if has_cost:
            cost_text = _cell(record, col["cost"], line, "cost")
            try:
                cost = to_fraction(cost_text)
            except (TypeError, ValueError):
                raise ParseError(f"cost {cost_text!r} is not a number", line) from None
        try:
            out.append(ScoredInstance(score, int(label_text), subspace, cost))
        except InputError as exc:
            raise ParseError(str(exc), line) from None
    if not out:
        raise InputError("no instances")
    return out


def metric_cell(row: ThresholdRow, kind: MetricKind) -> str:
    """Counts and costs print exactly; other metrics as float repr, blank if undefined."""
    if kind.is_additive:
        return format_fraction(exact_value(row, kind))
    value, defined = evaluate_flagged(row, kind)
    return repr(value) if defined else ""


def write_sheet(tables: Iterable[SensitivityTable], metrics: Sequence[MetricKind] = ()) -> str:
    """Sensitivity sheet text; one line per (subspace, threshold)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*SHEET_COLUMNS, *(k.label for k in metrics)])
    for table in sorted(tables, key=lambda t: subspace_order(t.subspace)):
        for row in table.rows:
            if table.has_cost:
                costs = [format_fraction(getattr(row, c)) for c in COST_COLUMNS]
            else:
                costs = [""] * 4
            writer.writerow([
                table.subspace,
                repr(row.threshold),
                row.tp, row.fp, row.tn, row.fn,
                *costs,
                *(metric_cell(row, k) for k in metrics),
            ])
    return buf.getvalue()


def parse_sheet(text: str) -> dict[Hashable, SensitivityTable]:
    """Parse sheet text; metric columns are ignored and recomputed on demand."""
    header, records = _rows(text)
    missing = [c for c in ("threshold", *COUNT_COLUMNS) if c not in header]
    if missing:
        raise ParseError(f"sheet header lacks column(s): {', '.join(missing)}", 1)
    col = {name: i for i, name in enumerate(header)}
    grouped: dict[Hashable, list[tuple[int, ThresholdRow]]] = {}
    for line, record in records:
        if len(record) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(record)}", line)
        key = record[col["subspace"]] if "subspace" in col else DEFAULT_SUBSPACE
        text = _cell(record, col["threshold"], line, "threshold")
        try:
            threshold = float(text)
        except ValueError:
            raise ParseError(f"threshold {text!r} is not a number", line) from None
        counts = []
        for name in COUNT_COLUMNS:
            cell = _cell(record, col[name], line, name)
            try:
                counts.append(int(cell))
            except ValueError:
                raise ParseError(f"{name} {cell!r} is not an integer", line) from None
        cost_cells = [record[col[c]].strip() if c in col else "" for c in COST_COLUMNS]
        if all(cost_cells):
            try:
                costs = [to_fraction(c) for c in cost_cells]
            except (TypeError, ValueError):
                raise ParseError("cost cell is not a number", line) from None
            row = ThresholdRow(threshold, *counts, *costs, True)
        elif not any(cost_cells):
            row = ThresholdRow(threshold, *counts)
        else:
            raise ParseError("cost cells must be all filled or all blank", line)
        grouped.setdefault(key, []).append((line, row))
    if not grouped:
        raise InputError("no instances")

    tables = {}
    for key in sorted(grouped, key=subspace_order):
        entries = grouped[key]
        has_cost = entries[0][1].has_cost
        if any(r.has_cost != has_cost for _, r in entries):
            line = next(ln for ln, r in entries if r.has_cost != has_cost)
            raise ParseError(f"subspace {key!r} mixes rows with and without costs", line)
        first = entries[0][1]
        table = SensitivityTable(
            key,
            tuple(r for _, r in entries),
            first.tp + first.fn,
            first.fp + first.tn,
            has_cost,
        )
        table.validate()
        tables[key] = table
    return tables


@dataclass(frozen=True)
class RunConfig:
    objective: ObjectiveSpec
    constraints: tuple[ConstraintSpec, ...] = ()
    grid_mode: str = UNIFORM
    grid_step: Fraction | None = None
    report_metrics: tuple[MetricKind, ...] = field(default=())

    def echo(self) -> dict:
        """Normalized config as it appears in reports."""
        return {
            "objective": {"metric": self.objective.metric.label, "direction": self.objective.direction},
            "constraints": [
                {
                    "scope": c.scope,
                    "subspace": c.subspace,
                    "metric": c.metric.label,
                    "op": c.op,
                    "bound": c.bound_text,
                }
                for c in self.constraints
            ],
            "report_metrics": [k.label for k in self.report_metrics],
        }


def _bound_text(value) -> str:
    if isinstance(value, bool) or not isinstance(value, (str, int, float)):
        raise InputError(f"constraint bound must be a decimal string or number, got {value!r}")
    return value.strip() if isinstance(value, str) else repr(value)


def parse_config(data: Mapping) -> RunConfig:
    if not isinstance(data, Mapping):
        raise InputError("config must be a JSON object")
    unknown = set(data) - {"objective", "constraints", "grid", "report_metrics"}
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    obj = data.get("objective")
    if not isinstance(obj, Mapping) or "metric" not in obj:
        raise InputError("config needs an objective with a metric")
    objective = ObjectiveSpec(parse_metric(str(obj["metric"])), obj.get("direction", MINIMIZE))

    constraints = []
    for i, entry in enumerate(data.get("constraints") or ()):
        if not isinstance(entry, Mapping):
            raise InputError(f"constraint {i} must be an object")
        for key in ("metric", "op", "bound"):
            if key not in entry:
                raise InputError(f"constraint {i} lacks {key!r}")
        sub = entry.get("subspace")
        text = _bound_text(entry["bound"])
        constraints.append(
            ConstraintSpec(
                parse_metric(str(entry["metric"])),
                entry["op"],
                text,
                entry.get("scope", LOCAL),
                None if sub is None else str(sub),
                text,
            )
        )

    grid = data.get("grid") or {}
    if not isinstance(grid, Mapping):
        raise InputError("grid must be an object")
    mode = grid.get("mode", UNIFORM)
    if mode not in (UNIFORM, UNIQUE_SCORES):
        raise InputError(f"unknown grid mode {mode!r}")
    step = grid.get("step")
    if step is not None:
        try:
            step = to_fraction(step)
        except (TypeError, ValueError):
            raise InputError(f"grid step {step!r} is not a number") from None

    metrics = tuple(parse_metric(str(m)) for m in data.get("report_metrics") or ())
    return RunConfig(objective, tuple(constraints), mode, step, metrics)


def read_instances(path) -> list[ScoredInstance]:
    return parse_instances(read_text(path))


def read_sheet(path) -> dict[Hashable, SensitivityTable]:
    return parse_sheet(read_text(path))


def read_config(path) -> RunConfig:
    return parse_config_text(read_text(path))


def parse_config_text(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config is not valid JSON: {exc.msg}", exc.lineno) from None
    return parse_config(data)
