"""Exhaustive enumeration oracle for small instances.

Enumerates every assignment of customers to vehicles and every visit ordering,
with order-constraint and timing pruning. Vehicles are interchangeable, so the
best ordering of a customer group is memoised by the group alone. Order pairs
force their endpoints onto one vehicle, so assignment choices are made per
order-component rather than per customer.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import inf
from typing import TYPE_CHECKING

from ..errors import UsageError
from ..instance import TOLERANCE, ProblemInstance
from ..solution import Solution, build_solution

if TYPE_CHECKING:
    from ..constraints import SideConstraints

ORACLE_LIMIT = 8
DECIDE_NODE_LIMIT = 200_000


class _Exhausted(Exception):
    """Node budget spent before the enumeration completed."""


class _NodeBudget:
    __slots__ = ("remaining", "should_stop", "count")

    def __init__(self, limit: int | None, should_stop=None):
        self.remaining = limit
        self.should_stop = should_stop
        self.count = 0

    def spend(self) -> None:
        self.count += 1
        if self.remaining is not None:
            self.remaining -= 1
            if self.remaining <= 0:
                raise _Exhausted
        if self.should_stop is not None and self.count % 1024 == 0 and self.should_stop():
            raise _Exhausted


@dataclass
class _Component:
    members: tuple[int, ...]  # matrix indices
    vehicle: int | None  # forced vehicle when any member is locked


def _components(instance: ProblemInstance, constraints) -> list[_Component] | None:
    """Union order-pair endpoints; returns None when a component carries two locks."""
    parent: dict[int, int] = {instance.index_of(c.id): instance.index_of(c.id) for c in instance.customers}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for before, after in constraints.orders:
        a, b = find(instance.index_of(before)), find(instance.index_of(after))
        if a != b:
            parent[a] = b

    groups: dict[int, list[int]] = {}
    for idx in parent:
        groups.setdefault(find(idx), []).append(idx)

    locks = {instance.index_of(cid): v for cid, v in constraints.locks.items()}
    out = []
    for members in groups.values():
        forced = {locks[m] for m in members if m in locks}
        if len(forced) > 1:
            return None
        out.append(_Component(tuple(sorted(members)), forced.pop() if forced else None))
    out.sort(key=lambda c: c.members)
    return out


class _Enumerator:
    def __init__(self, instance: ProblemInstance, constraints, budget: _NodeBudget):
        self.instance = instance
        self.budget = budget
        self.tt = instance.travel_time.tolist()
        self.dist = instance.distance.tolist()
        self.open = [0.0] + [c.window_open for c in instance.customers]
        self.close = [0.0] + [c.window_close for c in instance.customers]
        self.service = [0.0] + [c.service_period for c in instance.customers]
        self.horizon_open = instance.depot.horizon_open
        self.horizon_close = instance.depot.horizon_close
        # order pairs as matrix indices: before -> set of afters it must precede
        self.preds: dict[int, set[int]] = {}
        for before, after in constraints.orders:
            bi, ai = instance.index_of(before), instance.index_of(after)
            self.preds.setdefault(ai, set()).add(bi)
        self._ordering_memo: dict[frozenset[int], tuple[float, tuple[int, ...]] | None] = {}

    # -- single-vehicle ordering ------------------------------------------------

    def best_ordering(self, group: frozenset[int]) -> tuple[float, tuple[int, ...]] | None:
        """Minimum-distance feasible ordering of one vehicle's customers, or None."""
        if group in self._ordering_memo:
            return self._ordering_memo[group]
        best: list = [inf, None]
        members = sorted(group)

        def dfs(remaining: list[int], prefix: list[int], prev: int, t: float, dist: float):
            self.budget.spend()
            if not remaining:
                total = dist + self.dist[prev][0]
                back = t + self.tt[prev][0]
                if back > self.horizon_close + TOLERANCE:
                    return
                seq = tuple(prefix)
                if total < best[0] - TOLERANCE or (
                    total <= best[0] + TOLERANCE and (best[1] is None or seq < best[1])
                ):
                    best[0], best[1] = min(total, best[0]), seq
                return
            if dist > best[0] + TOLERANCE:
                return
            for i, c in enumerate(remaining):
                pred = self.preds.get(c)
                if pred and any(p in remaining and p != c for p in pred):
                    continue
                arrival = t + self.tt[prev][c]
                start = max(arrival, self.open[c])
                finish = start + self.service[c]
                if finish > self.close[c] + TOLERANCE:
                    continue
                if finish > self.horizon_close + TOLERANCE:
                    continue
                dfs(remaining[:i] + remaining[i + 1:], prefix + [c], c, finish, dist + self.dist[prev][c])

        dfs(members, [], 0, self.horizon_open, 0.0)
        result = None if best[1] is None else (best[0], best[1])
        self._ordering_memo[group] = result
        return result

    # -- assignment enumeration ---------------------------------------------------

    def search(self, components: list[_Component], vehicle_count: int):
        """Returns (best_total, best_routes) with best_routes None when unsatisfiable."""
        free = [c for c in components if c.vehicle is None]
        forced = [c for c in components if c.vehicle is not None]
        base: list[list[int]] = [[] for _ in range(vehicle_count)]
        for comp in forced:
            base[comp.vehicle].extend(comp.members)

        best_total = inf
        best_key: tuple | None = None
        best_routes: list[tuple[int, ...]] | None = None

        def assign(i: int, groups: list[list[int]]):
            nonlocal best_total, best_key, best_routes
            self.budget.spend()
            if i == len(free):
                total = 0.0
                seqs: list[tuple[int, ...]] = []
                for g in groups:
                    ordered = self.best_ordering(frozenset(g))
                    if ordered is None:
                        return
                    total += ordered[0]
                    seqs.append(ordered[1])
                # Smallest visit sequence first, then vehicle index: non-empty
                # routes on the lowest vehicles beat trailing the same tour on
                # a later vehicle.
                key = tuple((1,) if not s else (0, s) for s in seqs)
                if total < best_total - TOLERANCE or (
                    total <= best_total + TOLERANCE and (best_key is None or key < best_key)
                ):
                    best_total = min(total, best_total)
                    best_key = key
                    best_routes = seqs
                return
            for v in range(vehicle_count):
                groups[v].extend(free[i].members)
                assign(i + 1, groups)
                del groups[v][len(groups[v]) - len(free[i].members):]

        assign(0, base)
        return best_total, best_routes


def _run(instance: ProblemInstance, constraints, node_limit: int | None, should_stop=None):
    from ..constraints import SideConstraints

    constraints = constraints or SideConstraints.empty()
    components = _components(instance, constraints)
    if components is None:
        return False, None, True  # found, solution, complete
    budget = _NodeBudget(node_limit, should_stop)
    enum = _Enumerator(instance, constraints, budget)
    try:
        total, routes = enum.search(components, instance.vehicle_count)
        complete = True
    except _Exhausted:
        return False, None, False
    if routes is None:
        return False, None, complete
    visit_lists = [[instance.customers[i - 1].id for i in seq] for seq in routes]
    return True, build_solution(instance, visit_lists, constraints), complete


def solve_exhaustive(instance: ProblemInstance, constraints=None) -> Solution | None:
    """Certified optimum for instances within the oracle limit; None when unsatisfiable.

    Ties are broken by the lexicographically smallest visit sequence, then
    vehicle index.
    """
    if instance.customer_count > ORACLE_LIMIT:
        raise UsageError(
            f"instance has {instance.customer_count} customers, above the oracle limit {ORACLE_LIMIT}"
        )
    found, solution, _ = _run(instance, constraints, node_limit=None)
    return solution if found else None


def try_decide(
    instance: ProblemInstance,
    constraints=None,
    node_limit: int = DECIDE_NODE_LIMIT,
    should_stop=None,
):
    """Bounded exhaustive feasibility decision.

    Returns (True, witness_solution) when a feasible solution exists,
    (False, None) when provably none exists, or None when the enumeration is
    not tractable within the node budget.
    """
    from ..constraints import SideConstraints

    constraints = constraints or SideConstraints.empty()
    components = _components(instance, constraints)
    if components is None:
        return False, None
    # Above the raw oracle limit the decision is attempted only when locks
    # collapse the assignment space to near-nothing (e.g. a fully locked
    # solution after a vehicle breakdown).
    free = sum(1 for c in components if c.vehicle is None)
    if instance.customer_count > ORACLE_LIMIT and instance.vehicle_count ** free > 256:
        return None
    found, solution, complete = _run(instance, constraints, node_limit, should_stop)
    if found:
        return True, solution
    if complete:
        return False, None
    return None
