"""Command-line entry point: ``otlp {sensitivity,optimize,verify,curves,fixture}``.

Exit codes: 0 success, 1 input or configuration error, 2 infeasible,
3 verification mismatch. ``OTLP_LOG`` (debug, info, warning, ...) sets the
diagnostic log level; logs go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import random
import sys
from pathlib import Path

from otlp import fixtures, report, solver
from otlp._numeric import format_fraction, json_number
from otlp.errors import InfeasibleError, InputError, OTLPError, ResourceLimitError
from otlp.io import (
    RAW,
    RunConfig,
    detect_format,
    metric_cell,
    parse_instances,
    parse_sheet,
    read_config,
    read_text,
    write_sheet,
)
from otlp.metrics import parse_metric
from otlp.model import LOCAL, audit_value, build_problem
from otlp.sensitivity import UNIFORM, build_grid, build_sensitivity

log = logging.getLogger("otlp")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_MISMATCH = 3


def _setup_logging() -> None:
    level = os.environ.get("OTLP_LOG", "warning").strip().upper() or "WARNING"
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _grid(args, config: RunConfig | None, instances):
    mode = config.grid_mode if config else UNIFORM
    step = config.grid_step if config else None
    if args.grid_step is not None:
        mode, step = UNIFORM, args.grid_step
    return build_grid(mode, step, instances)


def _load_tables(args, config: RunConfig | None):
    """Sensitivity tables from either a score file or a sheet."""
    text = read_text(args.input)
    if detect_format(text) == RAW:
        instances = parse_instances(text)
        tables = build_sensitivity(instances, _grid(args, config, instances))
    else:
        tables = parse_sheet(text)
    log.info("loaded %d subspace table(s) from %s", len(tables), args.input)
    return tables


def cmd_sensitivity(args) -> int:
    config = read_config(args.config) if args.config else None
    instances = parse_instances(read_text(args.input))
    tables = build_sensitivity(instances, _grid(args, config, instances))
    names = args.metrics if args.metrics is not None else (
        [k.label for k in config.report_metrics] if config else []
    )
    kinds = [parse_metric(m) for m in names]
    _write(args.output, write_sheet(tables.values(), kinds))
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = read_config(args.config)
    tables = _load_tables(args, config)
    try:
        problem = build_problem(tables, config.objective, config.constraints)
        solution = solver.solve(problem, node_limit=args.node_limit)
    except InfeasibleError as exc:
        log.warning("infeasible: %s", exc)
        _write(args.output, report.dumps(report.infeasible_report(config.echo(), exc)))
        return EXIT_INFEASIBLE
    out = report.success_report(
        config.echo(), tables, solution, config.objective, config.constraints, config.report_metrics
    )
    _write(args.output, report.dumps(out))
    return EXIT_OK


def _summary(solution) -> dict:
    return {
        "thresholds": {str(c.subspace): c.threshold for c in solution.choices},
        "objective_value": json_number(solution.objective_value),
        "certificate": solution.certificate,
    }


def cmd_verify(args) -> int:
    config = read_config(args.config)
    tables = _load_tables(args, config)
    out = {"config": config.echo()}
    try:
        problem = build_problem(tables, config.objective, config.constraints)
    except InfeasibleError as exc:
        out.update(report.infeasible_report(config.echo(), exc), match=True)
        _write(args.output, report.dumps(out))
        return EXIT_INFEASIBLE
    results, errors = {}, {}
    for name, run in (
        ("solve", lambda: solver.solve(problem, node_limit=args.node_limit)),
        ("bruteforce", lambda: solver.solve_bruteforce(problem, tuple_limit=args.tuple_limit)),
    ):
        try:
            results[name] = run()
        except InfeasibleError as exc:
            errors[name] = exc
    if len(errors) == 2:
        match = True
    elif errors:
        match = False
    else:
        a, b = results["solve"], results["bruteforce"]
        match = a.indices == b.indices and a.objective_value == b.objective_value
    for name in ("solve", "bruteforce"):
        out[name] = _summary(results[name]) if name in results else {"infeasible": str(errors[name])}
    out["match"] = match
    out["status"] = "match" if match else "mismatch"
    _write(args.output, report.dumps(out))
    if not match:
        log.error("solve and enumeration disagree")
        return EXIT_MISMATCH
    return EXIT_INFEASIBLE if errors else EXIT_OK


def cmd_curves(args) -> int:
    config = read_config(args.config)
    tables = _load_tables(args, config)
    if len(tables) != 1:
        raise InputError(f"curves need a single subspace, found {len(tables)}")
    (key, table), = tables.items()
    kind = config.objective.metric
    if kind.needs_cost and not table.has_cost:
        build_problem(tables, config.objective)  # raises the cost error
    # with one subspace a global constraint is evaluated on the single row
    specs = [c for c in config.constraints if c.scope != LOCAL or c.applies_to(key)]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "objective_value", "feasible"])
    for row in table.rows:
        feasible = all(audit_value(c, [row])[1] for c in specs)
        writer.writerow([repr(row.threshold), metric_cell(row, kind), "true" if feasible else "false"])
    _write(args.output, buf.getvalue())
    return EXIT_OK


def cmd_fixture(args) -> int:
    """Write a seeded score CSV, or the five-row example sheet."""
    if args.kind == "table2-sheet":
        _write(args.output, write_sheet([fixtures.table2_table()]))
        return EXIT_OK
    if args.kind == "table2":
        instances = fixtures.table2_instances()
    else:
        rng = random.Random(args.seed)
        keys = [f"s{g}" for g in range(args.subspaces)]
        instances = fixtures.random_instances(rng, args.size, keys, with_cost=args.cost)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    has_cost = instances[0].cost is not None
    writer.writerow(["score", "label", "subspace", *(["cost"] if has_cost else [])])
    for inst in instances:
        cost = [format_fraction(inst.cost)] if has_cost else []
        writer.writerow([repr(inst.score), inst.label, inst.subspace, *cost])
    _write(args.output, buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="otlp", description="Optimal classification thresholds from validation scores."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--input", required=True, help="score CSV or sensitivity sheet")
        p.add_argument("--config", required=config_required, help="JSON run config")
        p.add_argument("--output", default="-", help="output path (default: stdout)")
        p.add_argument("--grid-step", dest="grid_step", help="uniform grid step, e.g. 0.005")
        p.add_argument("--tuple-limit", dest="tuple_limit", type=int, default=solver.DEFAULT_TUPLE_LIMIT)
        p.add_argument("--node-limit", dest="node_limit", type=int, default=solver.DEFAULT_NODE_LIMIT)
        p.add_argument("--seed", type=int, default=0, help="unused outside fixture generation")

    p = sub.add_parser("sensitivity", help="write the sensitivity sheet of a score file")
    common(p, config_required=False)
    p.add_argument("--metrics", nargs="*", help="derived metric columns, e.g. precision recall f1")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("optimize", help="select thresholds and write a JSON report")
    common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="check the solver against exhaustive enumeration")
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("curves", help="objective and feasibility per threshold")
    common(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("fixture", help="write a seeded synthetic score file")
    p.add_argument("--kind", choices=("random", "table2", "table2-sheet"), default="random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, default=500)
    p.add_argument("--subspaces", type=int, default=1)
    p.add_argument("--cost", action="store_true", help="attach per-instance costs")
    p.add_argument("--output", default="-")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"otlp: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, ResourceLimitError) as exc:
        print(f"otlp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OTLPError as exc:  # pragma: no cover - internal consistency failures
        print(f"otlp: internal error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
