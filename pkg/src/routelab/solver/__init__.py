"""Solver engine: construction, local search, exhaustive oracle, diverse pools, jobs."""

from .diverse import (
    DiverseResult,
    build_pool,
    diversity_matrix,
    generate_diverse,
    select_degraded,
    select_max_min,
)
from .exhaustive import ORACLE_LIMIT, solve_exhaustive, try_decide
from .jobs import JobManager, SolveJob, progress_stream
from .search import (
    BUDGET_EXHAUSTED,
    CANCELLED,
    IMPROVED,
    INFEASIBLE_CONSTRAINTS,
    UNCHANGED,
    ProgressEvent,
    SearchConfig,
    SolveBudget,
    SolveOutcome,
    batch_budget,
    construct,
    feasibility_attempt,
    improve,
    interactive_budget,
    reoptimise,
)

__all__ = [
    "BUDGET_EXHAUSTED",
    "CANCELLED",
    "DiverseResult",
    "IMPROVED",
    "INFEASIBLE_CONSTRAINTS",
    "JobManager",
    "ORACLE_LIMIT",
    "ProgressEvent",
    "SearchConfig",
    "SolveBudget",
    "SolveJob",
    "SolveOutcome",
    "UNCHANGED",
    "batch_budget",
    "build_pool",
    "construct",
    "diversity_matrix",
    "feasibility_attempt",
    "generate_diverse",
    "improve",
    "interactive_budget",
    "progress_stream",
    "reoptimise",
    "select_degraded",
    "select_max_min",
    "solve_exhaustive",
    "try_decide",
]
