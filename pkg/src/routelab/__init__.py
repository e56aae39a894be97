"""routelab: an interactive VRPTW workbench.

Library layers: instances, solutions, side constraints, a solver engine with
an exhaustive oracle, a provenance/gallery store, an HTTP service and a
reporting CLI.
"""

from .constraints import SatisfiabilityReport, SideConstraints, check_satisfiable
from .errors import (
    ConfigurationError,
    ConstraintConflict,
    InfeasibleConstraints,
    ParseError,
    RouteLabError,
    UsageError,
    ValidationError,
)
from .instance import (
    Customer,
    Depot,
    ProblemInstance,
    build_matrices,
    parse_native,
    parse_solomon,
    serialize_native,
)
from .solution import (
    Solution,
    Violation,
    WorkloadStats,
    build_solution,
    detect_violations,
    diversity,
    evaluate,
    propagate_timing,
    serialize_solution,
    solution_from_document,
    solution_to_document,
    workload_stats,
)

__version__ = "0.1.0"
