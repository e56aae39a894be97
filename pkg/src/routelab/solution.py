"""Solutions: route timing propagation, objective, violations, diversity, workload.

A Solution is an immutable snapshot. Editing always builds a new one via
``build_solution``; all derivation here is pure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, TYPE_CHECKING

from .errors import ParseError, UsageError, ValidationError
from .instance import TOLERANCE, ProblemInstance

if TYPE_CHECKING:
    from .constraints import SideConstraints

# Violation kinds
WINDOW_OVERRUN = "window_overrun"
HORIZON_OVERRUN = "horizon_overrun"
LOCK_BROKEN = "lock_broken"
ORDER_BROKEN = "order_broken"


class VisitTiming(NamedTuple):
    arrival: float
    service_start: float
    service_finish: float


@dataclass(frozen=True)
class RouteTiming:
    departure: float
    visits: tuple[VisitTiming, ...]
    return_time: float


@dataclass(frozen=True)
class Route:
    vehicle: int
    visits: tuple[str, ...]
    timing: RouteTiming


@dataclass(frozen=True)
class Violation:
    kind: str
    customers: tuple[str, ...]
    magnitude: float | None = None

    def to_dict(self) -> dict:
        return {"kind": self.kind, "customers": list(self.customers), "magnitude": self.magnitude}


@dataclass(frozen=True)
class Solution:
    instance_name: str
    routes: tuple[Route, ...]
    objective: float
    violations: tuple[Violation, ...]

    @property
    def feasible(self) -> bool:
        return not self.violations

    def visit_lists(self) -> list[list[str]]:
        return [list(r.visits) for r in self.routes]

    def vehicle_of(self, customer_id: str) -> int:
        for r in self.routes:
            if customer_id in r.visits:
                return r.vehicle
        raise UsageError(f"customer {customer_id!r} not present in solution")


@dataclass(frozen=True)
class WorkloadStats:
    customers_per_vehicle: tuple[int, ...]
    route_distances: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "customers_per_vehicle": list(self.customers_per_vehicle),
            "route_distances": list(self.route_distances),
        }


# ---------------------------------------------------------------------------
# Timing and objective
# ---------------------------------------------------------------------------

def propagate_timing(instance: ProblemInstance, visits: Sequence[str]) -> RouteTiming:
    """Forward-propagate route timing. Early arrival waits until window_open.

    Timing always computes; infeasibility is reported by detect_violations.
    """
    departure = instance.depot.horizon_open
    if not visits:
        return RouteTiming(departure=departure, visits=(), return_time=departure)
    tt = instance.travel_time
    t = departure
    prev = 0
    out = []
    for cid in visits:
        idx = instance.index_of(cid)
        cust = instance.customers[idx - 1]
        arrival = float(t + tt[prev, idx])
        start = max(arrival, cust.window_open)
        finish = start + cust.service_period
        out.append(VisitTiming(arrival=arrival, service_start=start, service_finish=finish))
        t = finish
        prev = idx
    return_time = float(t + tt[prev, 0])
    return RouteTiming(departure=departure, visits=tuple(out), return_time=return_time)


def route_distance(instance: ProblemInstance, visits: Sequence[str]) -> float:
    """Distance of one route including the depot departure and return legs."""
    if not visits:
        return 0.0
    d = instance.distance
    prev = 0
    total = 0.0
    for cid in visits:
        idx = instance.index_of(cid)
        total += d[prev, idx]
        prev = idx
    return float(total + d[prev, 0])


def evaluate(instance: ProblemInstance, visit_lists: Sequence[Sequence[str]]) -> float:
    """Total distance over all routes; empty routes contribute 0."""
    return float(sum(route_distance(instance, v) for v in visit_lists))


def _check_partition(instance: ProblemInstance, visit_lists: Sequence[Sequence[str]]) -> None:
    seen: list[str] = []
    for v in visit_lists:
        seen.extend(v)
    if len(seen) != len(set(seen)):
        dupes = sorted({c for c in seen if seen.count(c) > 1})
        raise ValidationError(f"customers visited more than once: {dupes}")
    expected = {c.id for c in instance.customers}
    got = set(seen)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise ValidationError(f"not a partition of customers (missing {missing}, unknown {extra})")


def detect_violations(
    instance: ProblemInstance,
    visit_lists: Sequence[Sequence[str]],
    constraints: "SideConstraints | None" = None,
    timings: Sequence[RouteTiming] | None = None,
) -> list[Violation]:
    """All window/horizon overruns plus lock/order breaks against ``constraints``."""
    out: list[Violation] = []
    for vehicle, visits in enumerate(visit_lists):
        timing = timings[vehicle] if timings is not None else propagate_timing(instance, visits)
        for cid, vt in zip(visits, timing.visits):
            close = instance.customer(cid).window_close
            if vt.service_finish > close + TOLERANCE:
                out.append(Violation(WINDOW_OVERRUN, (cid,), vt.service_finish - close))
        if timing.return_time > instance.depot.horizon_close + TOLERANCE:
            out.append(
                Violation(
                    HORIZON_OVERRUN,
                    tuple(visits),
                    timing.return_time - instance.depot.horizon_close,
                )
            )
    if constraints is not None:
        assignment: dict[str, int] = {}
        position: dict[str, tuple[int, int]] = {}
        for vehicle, visits in enumerate(visit_lists):
            for pos, cid in enumerate(visits):
                assignment[cid] = vehicle
                position[cid] = (vehicle, pos)
        for cid, vehicle in sorted(constraints.locks.items()):
            if assignment.get(cid) != vehicle:
                out.append(Violation(LOCK_BROKEN, (cid,)))
        for before, after in sorted(constraints.orders):
            pb, pa = position.get(before), position.get(after)
            if pb is None or pa is None:
                continue  # partition check rejects missing customers elsewhere
            if pb[0] != pa[0] or pb[1] >= pa[1]:
                out.append(Violation(ORDER_BROKEN, (before, after)))
    return out


def build_solution(
    instance: ProblemInstance,
    visit_lists: Sequence[Sequence[str]],
    constraints: "SideConstraints | None" = None,
) -> Solution:
    """Snapshot a complete assignment: timing, objective and violations derived."""
    if len(visit_lists) != instance.vehicle_count:
        raise ValidationError(
            f"expected {instance.vehicle_count} routes, got {len(visit_lists)}"
        )
    _check_partition(instance, visit_lists)
    timings = [propagate_timing(instance, v) for v in visit_lists]
    routes = tuple(
        Route(vehicle=i, visits=tuple(v), timing=t)
        for i, (v, t) in enumerate(zip(visit_lists, timings))
    )
    return Solution(
        instance_name=instance.name,
        routes=routes,
        objective=evaluate(instance, visit_lists),
        violations=tuple(detect_violations(instance, visit_lists, constraints, timings)),
    )


# ---------------------------------------------------------------------------
# Diversity and workload
# ---------------------------------------------------------------------------

def arc_set(solution: Solution) -> frozenset[tuple[str | None, str | None]]:
    """Directed legs including depot legs; vehicle-agnostic (depot encoded as None)."""
    arcs: set[tuple[str | None, str | None]] = set()
    for route in solution.routes:
        if not route.visits:
            continue
        prev: str | None = None
        for cid in route.visits:
            arcs.add((prev, cid))
            prev = cid
        arcs.add((prev, None))
    return frozenset(arcs)


def diversity(a: Solution, b: Solution) -> float:
    """Normalised symmetric arc difference in [0, 1]; 0 iff the arc sets are equal."""
    if a.instance_name != b.instance_name:
        raise UsageError(
            f"solutions belong to different instances ({a.instance_name!r} vs {b.instance_name!r})"
        )
    arcs_a, arcs_b = arc_set(a), arc_set(b)
    total = len(arcs_a) + len(arcs_b)
    if total == 0:
        return 0.0
    return len(arcs_a.symmetric_difference(arcs_b)) / total


def workload_stats(instance: ProblemInstance, solution: Solution) -> WorkloadStats:
    return WorkloadStats(
        customers_per_vehicle=tuple(len(r.visits) for r in solution.routes),
        route_distances=tuple(route_distance(instance, r.visits) for r in solution.routes),
    )


# ---------------------------------------------------------------------------
# Solution document (stable field names, UTF-8)
# ---------------------------------------------------------------------------

def solution_to_document(solution: Solution, constraints: "SideConstraints | None" = None) -> dict:
    doc = {
        "instance": solution.instance_name,
        "routes": solution.visit_lists(),
        "objective": solution.objective,
        "violations": [v.to_dict() for v in solution.violations],
    }
    if constraints is not None:
        doc["constraints"] = constraints.to_dict()
    return doc


def solution_from_document(doc: dict, instance: ProblemInstance) -> Solution:
    from .constraints import SideConstraints

    for key in ("instance", "routes"):
        if key not in doc:
            raise ParseError(f"missing field {key!r}", location="solution document")
    if doc["instance"] != instance.name:
        raise UsageError(
            f"solution references instance {doc['instance']!r}, expected {instance.name!r}"
        )
    constraints = None
    if doc.get("constraints") is not None:
        constraints = SideConstraints.from_dict(doc["constraints"], instance)
    return build_solution(instance, [list(r) for r in doc["routes"]], constraints)


def serialize_solution(solution: Solution, constraints: "SideConstraints | None" = None) -> str:
    return json.dumps(solution_to_document(solution, constraints), indent=2)


def solutions_identical(a: Solution, b: Solution) -> bool:
    """Structural identity: same per-vehicle visit sequences."""
    return a.visit_lists() == b.visit_lists()
