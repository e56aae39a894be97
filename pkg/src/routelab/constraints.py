"""User-imposed side constraints: customer→vehicle locks and precedence orders.

The store is immutable; every mutation returns a new store. Consistency is
enforced eagerly: an insertion that would break an invariant raises
ConstraintConflict with a human-readable report and leaves the store untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Iterable, TYPE_CHECKING

from .errors import ConstraintConflict, UsageError
from .instance import ProblemInstance

if TYPE_CHECKING:
    from .solver.search import SolveBudget
    from .solution import Solution


@dataclass(frozen=True)
class SideConstraints:
    locks: dict[str, int] = field(default_factory=dict)
    orders: frozenset[tuple[str, str]] = field(default_factory=frozenset)

    @staticmethod
    def empty() -> "SideConstraints":
        return SideConstraints()

    # -- invariant helpers ---------------------------------------------------

    def _find_cycle(self, orders: Iterable[tuple[str, str]]) -> list[str] | None:
        graph: dict[str, set[str]] = {}
        for before, after in orders:
            graph.setdefault(after, set()).add(before)
            graph.setdefault(before, set())
        try:
            TopologicalSorter(graph).prepare()
        except CycleError as exc:
            return list(exc.args[1])
        return None

    # -- mutations -----------------------------------------------------------

    def add_lock(self, instance: ProblemInstance, customer: str, vehicle: int) -> "SideConstraints":
        if not instance.has_customer(customer):
            raise UsageError(f"unknown customer {customer!r}")
        if not (0 <= vehicle < instance.vehicle_count):
            raise UsageError(f"vehicle {vehicle} out of range (fleet size {instance.vehicle_count})")
        for before, after in sorted(self.orders):
            if customer in (before, after):
                other = after if customer == before else before
                other_vehicle = self.locks.get(other)
                if other_vehicle is not None and other_vehicle != vehicle:
                    raise ConstraintConflict(
                        f"cannot lock {customer} to vehicle {vehicle}: order pair "
                        f"({before}, {after}) requires one vehicle but {other} is locked "
                        f"to vehicle {other_vehicle}"
                    )
        locks = dict(self.locks)
        locks[customer] = vehicle
        return SideConstraints(locks=locks, orders=self.orders)

    def remove_lock(self, customer: str) -> "SideConstraints":
        if customer not in self.locks:
            raise UsageError(f"no lock recorded for customer {customer!r}")
        locks = dict(self.locks)
        del locks[customer]
        return SideConstraints(locks=locks, orders=self.orders)

    def add_order(self, instance: ProblemInstance, before: str, after: str) -> "SideConstraints":
        for cid in (before, after):
            if not instance.has_customer(cid):
                raise UsageError(f"unknown customer {cid!r}")
        if before == after:
            raise UsageError("an order pair needs two distinct customers")
        vb, va = self.locks.get(before), self.locks.get(after)
        if vb is not None and va is not None and vb != va:
            raise ConstraintConflict(
                f"cannot order ({before}, {after}): endpoints are locked to different "
                f"vehicles ({before}→{vb}, {after}→{va})"
            )
        orders = set(self.orders)
        orders.add((before, after))
        cycle = self._find_cycle(orders)
        if cycle is not None:
            path = "→".join(cycle)
            raise ConstraintConflict(f"cannot order ({before}, {after}): cycle {path}")
        return SideConstraints(locks=self.locks, orders=frozenset(orders))

    def remove_order(self, before: str, after: str) -> "SideConstraints":
        if (before, after) not in self.orders:
            raise UsageError(f"no order recorded for ({before!r}, {after!r})")
        return SideConstraints(locks=self.locks, orders=self.orders - {(before, after)})

    # -- serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "locks": [[cid, vehicle] for cid, vehicle in sorted(self.locks.items())],
            "orders": [[b, a] for b, a in sorted(self.orders)],
        }

    @staticmethod
    def from_dict(doc: dict, instance: ProblemInstance) -> "SideConstraints":
        store = SideConstraints.empty()
        for cid, vehicle in doc.get("locks", []):
            store = store.add_lock(instance, str(cid), int(vehicle))
        for before, after in doc.get("orders", []):
            store = store.add_order(instance, str(before), str(after))
        return store

    def __hash__(self):
        return hash((tuple(sorted(self.locks.items())), self.orders))


@dataclass(frozen=True)
class SatisfiabilityReport:
    """Outcome of check_satisfiable: 'satisfiable', 'unsatisfiable' or 'unknown'."""

    status: str
    witness: str
    solution: "Solution | None" = None

    @property
    def satisfiable(self) -> bool:
        return self.status == "satisfiable"


def check_satisfiable(
    instance: ProblemInstance,
    store: SideConstraints,
    budget: "SolveBudget | None" = None,
) -> SatisfiabilityReport:
    """Decide whether any feasible solution respects the store.

    Exact when exhaustive enumeration is tractable (small instances, or larger
    ones pinned down by locks); otherwise a bounded heuristic attempt that can
    prove satisfiability with a witness but never unsatisfiability.
    """
    from .solver import exhaustive, search

    decision = exhaustive.try_decide(instance, store)
    if decision is not None:
        found, best = decision
        if found:
            return SatisfiabilityReport(
                status="satisfiable",
                witness="exhaustive enumeration found a feasible solution",
                solution=best,
            )
        return SatisfiabilityReport(
            status="unsatisfiable",
            witness="exhaustive search over all assignments and orderings was exhausted "
            "without finding a feasible solution",
        )

    budget = budget or search.SolveBudget(wall_time_limit=3.0, iteration_limit=400, random_seed=0)
    attempt = search.feasibility_attempt(instance, store, budget)
    if attempt is not None:
        return SatisfiabilityReport(
            status="satisfiable",
            witness="bounded solve attempt found a feasible solution",
            solution=attempt,
        )
    return SatisfiabilityReport(
        status="unknown",
        witness="unknown, budget exhausted: instance exceeds the exhaustive oracle scale "
        "and the bounded solve attempt found no feasible solution",
    )
