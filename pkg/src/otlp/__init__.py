"""Decision-threshold selection over sensitivity tables by exact integer programming."""

from otlp.errors import (
    CostUnavailableError,
    InfeasibleError,
    InputError,
    OTLPError,
    ParseError,
    ResourceLimitError,
    UnsupportedConstraintError,
)
from otlp.metrics import MetricKind, annotate, evaluate, parse_metric
from otlp.model import ConstraintSpec, ObjectiveSpec, SelectionProblem, build_problem, filter_local, linearize_global
from otlp.sensitivity import (
    ScoredInstance,
    SensitivityTable,
    ThresholdGrid,
    ThresholdRow,
    build_grid,
    build_sensitivity,
    classify,
)
from otlp.solver import Solution, solve, solve_bruteforce, solve_lp

__version__ = "0.1.0"

__all__ = [
    "ConstraintSpec",
    "CostUnavailableError",
    "InfeasibleError",
    "InputError",
    "MetricKind",
    "OTLPError",
    "ObjectiveSpec",
    "ParseError",
    "ResourceLimitError",
    "ScoredInstance",
    "SelectionProblem",
    "SensitivityTable",
    "Solution",
    "ThresholdGrid",
    "ThresholdRow",
    "UnsupportedConstraintError",
    "annotate",
    "build_grid",
    "build_problem",
    "build_sensitivity",
    "classify",
    "evaluate",
    "filter_local",
    "linearize_global",
    "parse_metric",
    "solve",
    "solve_bruteforce",
    "solve_lp",
]
