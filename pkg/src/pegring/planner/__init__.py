"""Bounded-horizon symbolic task planner for the peg-and-ring domain."""

from .atoms import (
    ARMS,
    COLORS,
    GroundAtom,
    IllSorted,
    Inconsistent,
    PlannerError,
    State,
    atom,
    ground_externals,
    parse_atom,
    parse_instance,
)
from .domain import (
    Domain,
    GroundAction,
    InvalidPlan,
    Violation,
    action,
    check_executability,
)
from .explain import explain_plan
from .search import (
    DEFAULT_HORIZON_CAP,
    AggregateMode,
    MissingDistance,
    Plan,
    Unsatisfiable,
    solve,
    solve_optimized,
)

__all__ = [
    "ARMS",
    "COLORS",
    "AggregateMode",
    "DEFAULT_HORIZON_CAP",
    "Domain",
    "GroundAction",
    "GroundAtom",
    "IllSorted",
    "Inconsistent",
    "InvalidPlan",
    "MissingDistance",
    "Plan",
    "PlannerError",
    "State",
    "Unsatisfiable",
    "Violation",
    "action",
    "atom",
    "check_executability",
    "explain_plan",
    "ground_externals",
    "parse_atom",
    "parse_instance",
    "solve",
    "solve_optimized",
]
