"""Acceptance gate: one printed PASS/FAIL line per criterion."""

import json
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from otlp import (
    ConstraintSpec,
    InfeasibleError,
    ObjectiveSpec,
    build_grid,
    build_problem,
    linearize_global,
    solve,
    solve_bruteforce,
)
from otlp import cli
from otlp.fixtures import (
    TABLE2_COUNTS,
    TABLE2_F1,
    TABLE2_PRECISION,
    TABLE2_RECALL,
    imbalanced_dataset,
    random_instances,
    random_problem_spec,
    random_tables,
    sawtooth_table,
    table2_instances,
    table2_table,
)
from otlp.io import parse_sheet, write_sheet
from otlp.metrics import evaluate, parse_metric, satisfies
from otlp.model import GLOBAL
from otlp.sensitivity import DEFAULT_SUBSPACE, build_sensitivity_arrays


@pytest.fixture
def verdict(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance] criterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail

    return emit


def test_criterion_1_table2_reproduction(verdict, tmp_path):
    start = time.perf_counter()
    src = tmp_path / "scores.csv"
    lines = ["score,label,cost"] + [f"{i.score!r},{i.label},{i.cost}" for i in table2_instances()]
    src.write_text("\n".join(lines) + "\n")
    out = tmp_path / "sheet.csv"
    code = cli.main(["sensitivity", "--input", str(src), "--output", str(out), "--metrics", "precision", "recall", "f1"])
    sheet = parse_sheet(out.read_text())[DEFAULT_SUBSPACE]
    metrics = {t: r for t, r in zip(sheet.thresholds, sheet.rows)}
    columns = out.read_text().splitlines()
    header = columns[0].split(",")
    by_t = {float(line.split(",")[1]): dict(zip(header, line.split(","))) for line in columns[1:]}
    worst = 0.0
    counts_ok = code == 0 and (sheet.positive_count, sheet.negative_count) == (50, 100)
    for (t, tp, fp, tn, fn), p, r, f in zip(TABLE2_COUNTS, TABLE2_PRECISION, TABLE2_RECALL, TABLE2_F1):
        row = metrics[t]
        counts_ok &= (row.tp, row.fp, row.tn, row.fn) == (tp, fp, tn, fn)
        for name, printed in (("precision", p), ("recall", r), ("f1", f)):
            worst = max(worst, abs(float(by_t[t][name]) - printed))
    elapsed = time.perf_counter() - start
    ok = counts_ok and worst <= 0.001 and elapsed < 1.0
    verdict(1, ok, f"counts exact={counts_ok}, max metric error {worst:.4f} <= 0.001, {elapsed:.3f}s < 1s")


def test_criterion_2_unconstrained_table2(verdict, tmp_path):
    start = time.perf_counter()
    sheet = tmp_path / "t2.csv"
    sheet.write_text(write_sheet([table2_table()]))
    results = {}
    for metric, direction in (("total_cost", "minimize"), ("f1", "maximize")):
        cfg = tmp_path / f"{metric}.json"
        cfg.write_text(json.dumps({"objective": {"metric": metric, "direction": direction}}))
        out = tmp_path / f"{metric}.report.json"
        assert cli.main(["optimize", "--input", str(sheet), "--config", str(cfg), "--output", str(out)]) == 0
        rep = json.loads(out.read_text())
        results[metric] = (rep["threshold"], rep["objective"]["value"])
    elapsed = time.perf_counter() - start
    ok = (
        results["total_cost"] == (0.35, 100)
        and results["f1"][0] == 0.1
        and abs(results["f1"][1] - 0.857) <= 0.001
        and elapsed < 1.0
    )
    verdict(2, ok, f"total_cost -> {results['total_cost']}, f1 -> {results['f1']}, {elapsed:.3f}s < 1s")


def test_criterion_3_filtered_argmax(verdict):
    start = time.perf_counter()
    rng = random.Random(2024)
    kinds = ["precision", "recall", "f1", "mcc", "g_mean", "kappa", "accuracy", "predicted_positive"]
    objectives = ["f1", "f2", "mcc", "kappa", "accuracy", "g_mean", "precision", "recall", "total_cost", "fn_cost"]
    mismatches = compared = 0
    for _ in range(200):
        (table,) = random_tables(rng, 1, 150)
        cons = []
        for _ in range(rng.randint(1, 3)):
            kind = rng.choice(kinds)
            bound = Fraction(rng.randint(0, table.positive_count + table.negative_count)) if kind == "predicted_positive" \
                else Fraction(rng.randint(0, 90), 100)
            cons.append(ConstraintSpec(kind, rng.choice(["<=", ">="]), bound))
        metric = parse_metric(rng.choice(objectives))
        direction = rng.choice(["minimize", "maximize"])
        kept = [r for r in table.rows if all(satisfies(r, c.metric, c.op, c.bound) for c in cons)]
        try:
            sol = solve(build_problem([table], ObjectiveSpec(metric, direction), cons))
        except InfeasibleError:
            mismatches += bool(kept)
            continue
        compared += 1
        sign = 1 if direction == "minimize" else -1
        values = [evaluate(r, metric) for r in kept]
        best = min(range(len(kept)), key=lambda j: (sign * values[j], j))
        mismatches += sol.thresholds != (kept[best].threshold,)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10 and compared > 100
    verdict(3, ok, f"{mismatches} mismatches over 200 tables ({compared} feasible), {elapsed:.2f}s < 10s")


def test_criterion_4_oracle_equivalence(verdict):
    start = time.perf_counter()
    rng = random.Random(46)
    mismatches = cases = 0
    shapes = set()
    while cases < 500:
        tables = random_tables(rng, rng.randint(1, 3), 150)
        objective, constraints = random_problem_spec(rng, tables, max_coupling=3)
        try:
            p = build_problem(tables, objective, constraints)
        except InfeasibleError:
            continue
        cases += 1
        shapes.update(c.metric.name for c in constraints if c.scope == GLOBAL)
        try:
            a = solve(p)
        except InfeasibleError:
            a = None
        try:
            b = solve_bruteforce(p)
        except InfeasibleError:
            b = None
        if (a is None) != (b is None):
            mismatches += 1
        elif a is not None:
            same_value = a.objective_value == b.objective_value if p.exact else abs(a.objective_value - b.objective_value) <= 1e-9
            mismatches += not (same_value and a.indices == b.indices)
    elapsed = time.perf_counter() - start
    covered = {"predicted_positive", "precision", "recall"} <= shapes
    ok = mismatches == 0 and elapsed < 60 and covered
    verdict(4, ok, f"{mismatches} mismatches over {cases} problems, budget/precision/recall rows covered={covered}, {elapsed:.2f}s < 60s")


def test_criterion_5_linearization(verdict):
    rng = random.Random(5)
    discrepancies = checks = 0
    for _ in range(1000):
        (table,) = random_tables(rng, 1, 20, with_cost=False)
        metric = rng.choice(["precision", "recall"])
        op = rng.choice(["<=", ">="])
        bound = Fraction(rng.randint(0, 200), rng.randint(200, 400)) if rng.random() < 0.5 else Fraction(rng.randint(0, 20), 20)
        lins = linearize_global(ConstraintSpec(metric, op, bound, GLOBAL), [table.rows])
        for j, row in enumerate(table.rows):
            den = row.tp + (row.fp if metric == "precision" else row.fn)
            direct = den > 0 and (Fraction(row.tp, den) >= bound if op == ">=" else Fraction(row.tp, den) <= bound)
            discrepancies += all(l.holds((j,)) for l in lins) != direct
            checks += 1
    verdict(5, discrepancies == 0, f"{discrepancies} discrepancies over 1000 pairs ({checks} single-row selections)")


def test_criterion_6_table_invariants(verdict):
    rng = np.random.default_rng(6)
    violations = 0
    for _ in range(1000):
        n = int(rng.integers(1, 200))
        scores = np.round(rng.random(n), int(rng.integers(1, 4)))
        scores[rng.random(n) < 0.05] = rng.choice([0.0, 1.0])
        labels = rng.integers(0, 2, n)
        costs = [Fraction(int(c), 100) for c in rng.integers(0, 1000, n)]
        subspaces = [f"s{k}" for k in rng.integers(0, 3, n)]
        step = Fraction(1, int(rng.integers(2, 300)))
        tables = build_sensitivity_arrays(scores, labels, build_grid("uniform", step), subspaces, costs)
        for t in tables.values():
            try:
                t.validate()
            except Exception:
                violations += 1
            rows = t.rows
            violations += rows[0].threshold != 0.0 or (rows[0].tp, rows[0].fp) != (t.positive_count, t.negative_count)
            violations += any(
                b.tn < a.tn or b.fn < a.fn or b.tn_cost < a.tn_cost or b.fn_cost < a.fn_cost
                for a, b in zip(rows, rows[1:])
            )
    verdict(6, violations == 0, f"{violations} invariant violations over 1000 instance sets")


def test_criterion_7_sawtooth(verdict):
    results = []
    for teeth, depth in ((12, 40), (20, 15), (7, 60)):
        table = sawtooth_table(teeth, depth)
        p = build_problem([table], ObjectiveSpec("total_cost", "minimize"))
        costs = [r.fp_cost + r.fn_cost for r in table.rows]

        def climb(j):
            while True:
                nbrs = [k for k in (j - 1, j + 1) if 0 <= k < len(costs) and costs[k] < costs[j]]
                if not nbrs:
                    return j
                j = min(nbrs, key=lambda k: costs[k])

        enum = solve_bruteforce(p)
        interior = range(1, len(costs) - 1)
        traps = sum(costs[climb(j)] > enum.objective_value for j in interior)
        all_trapped = all(costs[climb(j)] > enum.objective_value for j in interior if costs[j] > enum.objective_value and abs(j - enum.indices[0]) > 2)
        results.append(solve(p).indices == enum.indices and traps > 0 and all_trapped)
    verdict(7, all(results), f"solve matched enumeration on {sum(results)}/3 sawtooth fixtures where hill-climbing stalls")


def test_criterion_8_determinism(verdict, tmp_path):
    rng = random.Random(8)
    inst = random_instances(rng, 2000, ("north", "south"), with_cost=True)
    src = tmp_path / "scores.csv"
    src.write_text("score,label,subspace,cost\n" + "".join(f"{i.score!r},{i.label},{i.subspace},{i.cost}\n" for i in inst))
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "objective": {"metric": "fn_cost", "direction": "minimize"},
        "constraints": [
            {"scope": "global", "metric": "predicted_positive", "op": "<=", "bound": "700"},
            {"scope": "global", "metric": "precision", "op": ">=", "bound": "0.6"},
            {"scope": "local", "metric": "recall", "op": ">=", "bound": "0.3"},
        ],
    }))
    outs = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert cli.main(["optimize", "--input", str(src), "--config", str(cfg), "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    verdict(8, outs[0] == outs[1], f"two optimize runs byte-identical={outs[0] == outs[1]} ({len(outs[0])} bytes)")


def _f1(scores, labels, t):
    pred = scores >= t
    tp = int(np.sum(pred & (labels == 1)))
    fp = int(np.sum(pred & (labels == 0)))
    fn = int(np.sum(~pred & (labels == 1)))
    return 2 * tp / (2 * tp + fp + fn) if tp else 0.0


def test_criterion_9_imbalanced_desk_analog(verdict):
    wins = 0
    details = []
    for seed in range(20):
        scores, labels = imbalanced_dataset(seed)
        half = len(scores) // 2
        tables = build_sensitivity_arrays(scores[:half], labels[:half], build_grid())
        sol = solve(build_problem(tables, ObjectiveSpec("f1", "maximize")))
        chosen = _f1(scores[half:], labels[half:], sol.thresholds[0])
        default = _f1(scores[half:], labels[half:], 0.5)
        wins += chosen >= default
        details.append((sol.thresholds[0], round(chosen, 3), round(default, 3)))
    verdict(9, wins >= 18, f"selected threshold F1 >= default-0.5 F1 on {wins}/20 seeds (need 18); e.g. {details[0]}")
