"""Assembly of the multiple-choice 0-1 selection program.

One binary variable per (subspace, threshold) candidate, exactly one variable
set per subspace, and linear coupling rows across subspaces. Local
constraints never become rows: they shrink each subspace's candidate list
before any variable exists.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

from otlp._numeric import format_fraction, to_fraction
from otlp.errors import CostUnavailableError, InfeasibleError, InputError, UnsupportedConstraintError
from otlp.metrics import MetricKind, evaluate, evaluate_flagged, exact_value, parse_metric, satisfies
from otlp.sensitivity import SensitivityTable, ThresholdRow, subspace_order

MINIMIZE = "minimize"
MAXIMIZE = "maximize"
LOCAL = "local"
GLOBAL = "global"
OPS = ("<=", ">=")

GLOBAL_RATIO_METRICS = ("precision", "recall")


def _as_metric(metric) -> MetricKind:
    return metric if isinstance(metric, MetricKind) else parse_metric(metric)


@dataclass(frozen=True)
class ObjectiveSpec:
    metric: MetricKind
    direction: str = MINIMIZE

    def __post_init__(self):
        object.__setattr__(self, "metric", _as_metric(self.metric))
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise InputError(f"direction must be minimize or maximize, got {self.direction!r}")

    @property
    def exact(self) -> bool:
        """Count and cost objectives are summed as exact rationals."""
        return self.metric.is_additive


@dataclass(frozen=True)
class ConstraintSpec:
    metric: MetricKind
    op: str
    bound: Fraction
    scope: str = LOCAL
    subspace: Hashable | None = None
    bound_text: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "metric", _as_metric(self.metric))
        if self.op not in OPS:
            raise InputError(f"constraint op must be <= or >=, got {self.op!r}")
        if self.scope not in (LOCAL, GLOBAL):
            raise InputError(f"constraint scope must be local or global, got {self.scope!r}")
        if self.scope == GLOBAL and self.subspace is not None:
            raise InputError("a global constraint cannot name a subspace")
        raw = self.bound
        try:
            bound = to_fraction(raw)
        except (TypeError, ValueError) as exc:
            raise InputError(f"constraint bound {raw!r} is not a number") from exc
        object.__setattr__(self, "bound", bound)
        if not self.bound_text:
            text = raw.strip() if isinstance(raw, str) else format_fraction(bound)
            object.__setattr__(self, "bound_text", text)
        if self.scope == GLOBAL and not (
            self.metric.is_additive or self.metric.name in GLOBAL_RATIO_METRICS
        ):
            raise UnsupportedConstraintError(
                f"{self.metric.label} is not linear in summed counts and can only be a local constraint"
            )

    @property
    def label(self) -> str:
        return f"{self.metric.label} {self.op} {self.bound_text}"

    def applies_to(self, subspace) -> bool:
        return self.scope == LOCAL and (self.subspace is None or self.subspace == subspace)


@dataclass(frozen=True)
class Candidate:
    threshold: float
    row: ThresholdRow | None = None


@dataclass(frozen=True)
class Group:
    subspace: Hashable
    candidates: tuple[Candidate, ...]

    def __len__(self):
        return len(self.candidates)


@dataclass(frozen=True)
class LinearConstraint:
    """``sum(coefficients[g][j] * t[g][j]) op bound`` over all candidates."""

    coefficients: tuple[tuple[Fraction, ...], ...]
    op: str
    bound: Fraction
    label: str = ""
    source: ConstraintSpec | None = field(default=None, compare=False)

    def lhs(self, choice: Sequence[int]) -> Fraction:
        return sum((self.coefficients[g][j] for g, j in enumerate(choice)), Fraction(0))

    def holds(self, choice: Sequence[int]) -> bool:
        value = self.lhs(choice)
        return value <= self.bound if self.op == "<=" else value >= self.bound


@dataclass(frozen=True)
class SelectionProblem:
    groups: tuple[Group, ...]
    coefficients: tuple[tuple, ...]
    direction: str = MINIMIZE
    constraints: tuple[LinearConstraint, ...] = ()
    exact: bool = True
    objective: ObjectiveSpec | None = None
    specs: tuple[ConstraintSpec, ...] = ()

    def __post_init__(self):
        if not self.groups:
            raise InputError("a selection problem needs at least one group")
        if len(self.coefficients) != len(self.groups):
            raise InputError("one coefficient list per group is required")
        for group, coefs in zip(self.groups, self.coefficients):
            if not group.candidates:
                raise InputError(f"subspace {group.subspace!r} has no candidates")
            if len(coefs) != len(group.candidates):
                raise InputError(f"subspace {group.subspace!r}: coefficient count mismatch")
            ts = [c.threshold for c in group.candidates]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise InputError(f"subspace {group.subspace!r}: candidates must ascend by threshold")
        for con in self.constraints:
            if [len(c) for c in con.coefficients] != [len(g) for g in self.groups]:
                raise InputError(f"constraint {con.label!r}: coefficient shape mismatch")

    @classmethod
    def from_coefficients(
        cls,
        objective: Sequence[Sequence],
        constraints: Sequence[tuple] = (),
        direction: str = MINIMIZE,
        thresholds: Sequence[Sequence[float]] | None = None,
    ) -> SelectionProblem:
        """Raw problem without sensitivity rows, mostly for tests.

        ``constraints`` holds ``(coefficients, op, bound)`` triples. Integer
        and Fraction coefficients keep the problem exact; any float makes
        the objective a float objective.
        """
        exact = all(not isinstance(v, float) for coefs in objective for v in coefs)
        groups = []
        for g, coefs in enumerate(objective):
            ts = thresholds[g] if thresholds is not None else [j / max(1, len(coefs)) for j in range(len(coefs))]
            groups.append(Group(g, tuple(Candidate(float(t)) for t in ts)))
        coef = tuple(
            tuple(Fraction(v) if exact else float(v) for v in coefs) for coefs in objective
        )
        rows = tuple(
            LinearConstraint(
                tuple(tuple(to_fraction(v) for v in c) for c in coefs),
                op,
                to_fraction(bound),
                label=f"row{k} {op} {bound}",
            )
            for k, (coefs, op, bound) in enumerate(constraints)
        )
        return cls(tuple(groups), coef, direction, rows, exact)

    @property
    def n_variables(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(g) for g in self.groups)

    def objective_value(self, choice: Sequence[int]):
        """Sum of the chosen coefficients, accumulated in group order."""
        total = Fraction(0) if self.exact else 0.0
        for g, j in enumerate(choice):
            total = total + self.coefficients[g][j]
        return total

    def is_feasible(self, choice: Sequence[int]) -> bool:
        return all(con.holds(choice) for con in self.constraints)

    def thresholds_of(self, choice: Sequence[int]) -> tuple[float, ...]:
        return tuple(self.groups[g].candidates[j].threshold for g, j in enumerate(choice))


def _check_cost(tables: Sequence[SensitivityTable], metric: MetricKind, what: str):
    if metric.needs_cost:
        missing = [t.subspace for t in tables if not t.has_cost]
        if missing:
            raise CostUnavailableError(
                f"{what} uses {metric.label} but no cost column was ingested "
                f"(subspace {missing[0]!r})"
            )


def filter_local(table: SensitivityTable, constraints: Sequence[ConstraintSpec]) -> list[ThresholdRow]:
    """Rows of ``table`` meeting every local constraint that applies to it.

    Feasibility is exact. Raises InfeasibleError naming the constraint that
    empties the candidate list.
    """
    applicable = [c for c in constraints if c.applies_to(table.subspace)]
    for con in applicable:
        _check_cost([table], con.metric, f"constraint {con.label!r}")
    kept = [
        row for row in table.rows
        if all(satisfies(row, c.metric, c.op, c.bound) for c in applicable)
    ]
    if kept:
        return kept
    binding = None
    for con in applicable:
        if not any(satisfies(row, con.metric, con.op, con.bound) for row in table.rows):
            binding = con
            break
    if binding is None:
        remaining = list(table.rows)
        for con in applicable:
            remaining = [r for r in remaining if satisfies(r, con.metric, con.op, con.bound)]
            if not remaining:
                binding = con
                break
    raise InfeasibleError(
        f"subspace {table.subspace!r} has no threshold satisfying {binding.label}",
        cause="local",
        subspace=table.subspace,
        constraint=binding.label,
    )


def linearize_global(
    spec: ConstraintSpec, groups: Sequence[Sequence[ThresholdRow]]
) -> list[LinearConstraint]:
    """Coupling rows equivalent to ``spec`` on any one-row-per-group selection.

    Additive metrics map to one row with the rows' own values. A ratio floor
    ``tp / d >= p`` becomes ``sum(tp - p*d) >= 0`` plus ``sum(d) >= 1``,
    the second row encoding that an undefined aggregate ratio fails.
    """
    if spec.scope != GLOBAL:
        raise InputError(f"{spec.label} is not a global constraint")
    metric = spec.metric
    if metric.is_additive:
        coefs = tuple(tuple(exact_value(r, metric) for r in rows) for rows in groups)
        return [LinearConstraint(coefs, spec.op, spec.bound, spec.label, spec)]
    if metric.name == "precision":
        denom = [[r.tp + r.fp for r in rows] for rows in groups]
    elif metric.name == "recall":
        denom = [[r.tp + r.fn for r in rows] for rows in groups]
    else:
        raise UnsupportedConstraintError(f"{metric.label} cannot be a global constraint")
    p = spec.bound
    ratio = tuple(
        tuple(r.tp - p * d for r, d in zip(rows, ds)) for rows, ds in zip(groups, denom)
    )
    defined = tuple(tuple(Fraction(d) for d in ds) for ds in denom)
    return [
        LinearConstraint(ratio, spec.op, Fraction(0), spec.label, spec),
        LinearConstraint(defined, ">=", Fraction(1), f"{spec.label} (defined)", spec),
    ]


def build_problem(
    tables: Mapping[Hashable, SensitivityTable] | Sequence[SensitivityTable],
    objective: ObjectiveSpec,
    constraints: Sequence[ConstraintSpec] = (),
) -> SelectionProblem:
    if isinstance(tables, Mapping):
        tables = list(tables.values())
    tables = sorted(tables, key=lambda t: subspace_order(t.subspace))
    if not tables:
        raise InputError("no sensitivity tables")
    keys = {t.subspace for t in tables}
    _check_cost(tables, objective.metric, "objective")
    for con in constraints:
        if con.subspace is not None and con.subspace not in keys:
            raise InputError(f"constraint {con.label!r} names unknown subspace {con.subspace!r}")
        _check_cost(tables, con.metric, f"constraint {con.label!r}")

    local = [c for c in constraints if c.scope == LOCAL]
    kept = [filter_local(t, local) for t in tables]

    groups = tuple(
        Group(t.subspace, tuple(Candidate(r.threshold, r) for r in rows))
        for t, rows in zip(tables, kept)
    )
    if objective.exact:
        coefs = tuple(tuple(exact_value(r, objective.metric) for r in rows) for rows in kept)
    else:
        coefs = tuple(tuple(evaluate(r, objective.metric) for r in rows) for rows in kept)
    rows = []
    for con in constraints:
        if con.scope == GLOBAL:
            rows.extend(linearize_global(con, kept))
    return SelectionProblem(
        groups,
        coefs,
        objective.direction,
        tuple(rows),
        objective.exact,
        objective,
        tuple(constraints),
    )


def audit_value(spec: ConstraintSpec, rows: Sequence[ThresholdRow]):
    """Achieved value of ``spec`` over the given selected rows.

    Local constraints take one row; global ones pool the selected rows.
    Returns ``(value, satisfied)`` with ``value`` None when undefined.
    """
    metric = spec.metric
    if metric.is_additive:
        value = sum((exact_value(r, metric) for r in rows), Fraction(0))
        ok = value <= spec.bound if spec.op == "<=" else value >= spec.bound
        return value, ok
    if len(rows) == 1:
        ok = satisfies(rows[0], metric, spec.op, spec.bound)
        val, defined = evaluate_flagged(rows[0], metric)
        return (val if defined else None), ok
    tp = sum(r.tp for r in rows)
    denom = sum(r.tp + (r.fp if metric.name == "precision" else r.fn) for r in rows)
    if denom == 0:
        return None, False
    value = Fraction(tp, denom)
    ok = value <= spec.bound if spec.op == "<=" else value >= spec.bound
    return value, ok

