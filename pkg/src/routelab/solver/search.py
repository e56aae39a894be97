"""Construction, neighborhood search and constrained re-optimisation.

The engine works on a lexicographic cost (violation magnitude, violation
count, distance): infeasible states are repaired first, then distance is
minimised. Locked customers are never placed on a vehicle other than their
lock, and order pairs that the start already satisfies are kept satisfied by
construction. Diversification is a destroy-repair kick fired on stagnation.
All randomness comes from the budget seed; runs are deterministic when the
iteration limit is the binding budget.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass
from typing import Sequence, TYPE_CHECKING

from ..errors import ValidationError
from ..instance import TOLERANCE, ProblemInstance
from ..solution import Solution, build_solution

if TYPE_CHECKING:
    from ..constraints import SideConstraints

IMPROVED = "improved"
UNCHANGED = "unchanged"
INFEASIBLE_CONSTRAINTS = "infeasible_constraints"
CANCELLED = "cancelled"
BUDGET_EXHAUSTED = "budget_exhausted"

PHASE_CONSTRUCTING = "constructing"
PHASE_IMPROVING = "improving"
PHASE_FINISHED = "finished"


@dataclass(frozen=True)
class SolveBudget:
    """Limits for one solve run; the seed fully determines the run."""

    wall_time_limit: float | None = None
    iteration_limit: int | None = None
    random_seed: int = 0

    def __post_init__(self):
        if self.wall_time_limit is None and self.iteration_limit is None:
            raise ValidationError("a solve budget needs at least one finite limit")


def interactive_budget(seed: int = 0) -> SolveBudget:
    return SolveBudget(wall_time_limit=3.0, random_seed=seed)


def batch_budget(seed: int = 0, wall_time: float = 30.0) -> SolveBudget:
    return SolveBudget(wall_time_limit=wall_time, random_seed=seed)


@dataclass(frozen=True)
class SearchConfig:
    """Tuning knobs; configuration, not contract."""

    kick_fraction: float = 0.3
    max_stagnant_kicks: int | None = 40  # stop after this many kicks without a new best
    full_rebuild_every: int = 5  # every n-th kick removes all unlocked customers
    kick_random_slot_prob: float = 0.2  # chance a reinserted customer takes a random slot
    construct_noise: float = 0.15
    check_interval: int = 64
    progress_interval: float = 0.45
    diverse_starts: int = 8
    pool_capacity: int = 400


@dataclass(frozen=True)
class ProgressEvent:
    elapsed: float
    iterations: int
    best_objective: float | None
    phase: str
    status: str | None = None

    def to_dict(self) -> dict:
        return {
            "elapsed": self.elapsed,
            "iterations": self.iterations,
            "best_objective": self.best_objective,
            "phase": self.phase,
            "status": self.status,
        }


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    solution: Solution | None
    iterations: int
    elapsed: float
    infeasible_witness: str | None = None


class _StopSearch(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _Ticker:
    """Cheap periodic check for cancellation, deadline and progress emission."""

    __slots__ = ("deadline", "cancel", "on_beat", "interval", "count")

    def __init__(self, deadline, cancel, on_beat, interval):
        self.deadline = deadline
        self.cancel = cancel
        self.on_beat = on_beat
        self.interval = interval
        self.count = 0

    def tick(self) -> None:
        self.count += 1
        if self.count % self.interval:
            return
        if self.cancel is not None and self.cancel.is_set():
            raise _StopSearch(CANCELLED)
        now = time.perf_counter()
        if self.deadline is not None and now >= self.deadline:
            raise _StopSearch("time")
        if self.on_beat is not None:
            self.on_beat(now)


Cost = tuple[float, int, float]  # (violation magnitude, violation count, distance)


def _lex_better(a: Cost, b: Cost) -> bool:
    if a[0] < b[0] - TOLERANCE:
        return True
    if a[0] > b[0] + TOLERANCE:
        return False
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2] - TOLERANCE


class _Work:
    """Mutable search state over matrix indices (depot = 0)."""

    def __init__(
        self,
        instance: ProblemInstance,
        constraints: "SideConstraints",
        visit_lists: Sequence[Sequence[str]],
    ):
        self.instance = instance
        self.k = instance.vehicle_count
        self.tt = instance.travel_time.tolist()
        self.dist = instance.distance.tolist()
        self.open = [0.0] + [c.window_open for c in instance.customers]
        self.close = [0.0] + [c.window_close for c in instance.customers]
        self.service = [0.0] + [c.service_period for c in instance.customers]
        self.horizon_open = instance.depot.horizon_open
        self.horizon_close = instance.depot.horizon_close
        self.routes: list[list[int]] = [
            [instance.index_of(c) for c in visits] for visits in visit_lists
        ]
        self.lock: dict[int, int] = {
            instance.index_of(cid): v for cid, v in constraints.locks.items()
        }
        self.orders: list[tuple[int, int]] = sorted(
            (instance.index_of(b), instance.index_of(a)) for b, a in constraints.orders
        )
        self.effective_lock = self._effective_locks()
        self.veh_of: list[int | None] = [None] * (instance.customer_count + 1)
        for v, route in enumerate(self.routes):
            for idx in route:
                self.veh_of[idx] = v
        self.route_stats: list[Cost] = [self._eval_route(r) for r in self.routes]
        self.protected: list[tuple[int, int]] = []

    # -- constraint structure ---------------------------------------------------

    def _effective_locks(self) -> dict[int, int]:
        """Per-customer lock, extended over order components with a unique lock."""
        parent: dict[int, int] = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for b, a in self.orders:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[ra] = rb
        comps: dict[int, list[int]] = {}
        for idx in parent:
            comps.setdefault(find(idx), []).append(idx)
        effective = dict(self.lock)
        for members in comps.values():
            forced = {self.lock[m] for m in members if m in self.lock}
            if len(forced) == 1:
                v = forced.pop()
                for m in members:
                    effective[m] = v
        return effective

    def allowed_vehicles(self, idx: int) -> range | tuple[int, ...]:
        v = self.effective_lock.get(idx)
        return range(self.k) if v is None else (v,)

    # -- evaluation ---------------------------------------------------------------

    def _eval_route(self, route: list[int]) -> Cost:
        if not route:
            return (0.0, 0, 0.0)
        tt, dist = self.tt, self.dist
        t = self.horizon_open
        prev = 0
        mag = 0.0
        cnt = 0
        total = 0.0
        for c in route:
            t += tt[prev][c]
            total += dist[prev][c]
            if t < self.open[c]:
                t = self.open[c]
            t += self.service[c]
            over = t - self.close[c]
            if over > TOLERANCE:
                mag += over
                cnt += 1
            prev = c
        t += tt[prev][0]
        total += dist[prev][0]
        over = t - self.horizon_close
        if over > TOLERANCE:
            mag += over
            cnt += 1
        return (mag, cnt, total)

    def constraint_breaks(self) -> int:
        breaks = 0
        for idx, v in self.lock.items():
            if self.veh_of[idx] != v:
                breaks += 1
        for b, a in self.orders:
            if not self.order_satisfied(b, a):
                breaks += 1
        return breaks

    def order_satisfied(self, b: int, a: int) -> bool:
        vb, va = self.veh_of[b], self.veh_of[a]
        if vb is None or va is None or vb != va:
            return False
        route = self.routes[vb]
        return route.index(b) < route.index(a)

    def total_cost(self) -> Cost:
        mag = 0.0
        cnt = 0
        dist = 0.0
        for m, c, d in self.route_stats:
            mag += m
            cnt += c
            dist += d
        return (mag, cnt + self.constraint_breaks(), dist)

    def protected_ok(self) -> bool:
        for b, a in self.protected:
            if not self.order_satisfied(b, a):
                return False
        return True

    # -- mutation helpers -----------------------------------------------------------

    def refresh(self, vehicles: Sequence[int]) -> None:
        for v in vehicles:
            self.route_stats[v] = self._eval_route(self.routes[v])
            for idx in self.routes[v]:
                self.veh_of[idx] = v

    def snapshot(self, vehicles: Sequence[int]):
        return [(v, self.routes[v][:], self.route_stats[v]) for v in vehicles]

    def restore(self, saved) -> None:
        for v, route, stats in saved:
            # In place: scan loops may hold aliases to the route lists.
            self.routes[v][:] = route
            self.route_stats[v] = stats
            for idx in route:
                self.veh_of[idx] = v

    def visit_lists(self) -> list[list[str]]:
        customers = self.instance.customers
        return [[customers[i - 1].id for i in route] for route in self.routes]

    def copy_routes(self) -> list[list[int]]:
        return [r[:] for r in self.routes]

    def set_routes(self, routes: list[list[int]]) -> None:
        self.routes = [r[:] for r in routes]
        self.refresh(range(self.k))


# ---------------------------------------------------------------------------
# Insertion machinery (shared by construct, kicks and lock enforcement)
# ---------------------------------------------------------------------------

def _slot_order_breaks(work: _Work, idx: int, vehicle: int, pos: int) -> int:
    """Store-order breaks a hypothetical insertion would leave among placed customers."""
    breaks = 0
    for b, a in work.orders:
        if b == idx:
            va = work.veh_of[a]
            if va is None:
                continue
            if va != vehicle or work.routes[va].index(a) < pos:
                breaks += 1
        elif a == idx:
            vb = work.veh_of[b]
            if vb is None:
                continue
            if vb != vehicle or work.routes[vb].index(b) >= pos:
                breaks += 1
    return breaks


def _slot_protected_ok(work: _Work, idx: int, vehicle: int, pos: int) -> bool:
    for b, a in work.protected:
        if b == idx:
            va = work.veh_of[a]
            if va is not None and (va != vehicle or work.routes[va].index(a) < pos):
                return False
        elif a == idx:
            vb = work.veh_of[b]
            if vb is not None and (vb != vehicle or work.routes[vb].index(b) >= pos):
                return False
    return True


def _best_slot(
    work: _Work,
    idx: int,
    rng: random.Random | None,
    noise: float,
    ticker: _Ticker | None,
    enforce_protected: bool,
    vehicles: Sequence[int] | None = None,
):
    """Cheapest insertion slot for one customer.

    Slots are ranked lexicographically by (new order breaks, added violation
    magnitude, added violation count, noised added distance): feasible,
    order-respecting slots always win; otherwise the minimal-overrun slot is
    chosen. Returns (vehicle, position) or None when no slot is admissible.
    """
    best_key = None
    best_slot = None
    candidates = vehicles if vehicles is not None else work.allowed_vehicles(idx)
    for v in candidates:
        route = work.routes[v]
        base = work.route_stats[v]
        for pos in range(len(route) + 1):
            if ticker is not None:
                ticker.tick()
            if enforce_protected and not _slot_protected_ok(work, idx, v, pos):
                continue
            route.insert(pos, idx)
            mag, cnt, dist = work._eval_route(route)
            del route[pos]
            d_dist = dist - base[2]
            if rng is not None and noise > 0.0:
                d_dist *= 1.0 + rng.uniform(-noise, noise)
            key = (
                _slot_order_breaks(work, idx, v, pos),
                mag - base[0],
                cnt - base[1],
                d_dist,
            )
            if best_key is None or key < best_key:
                best_key = key
                best_slot = (v, pos)
    if best_slot is None:
        return None
    return best_key, best_slot


def _insert(work: _Work, idx: int, vehicle: int, pos: int) -> None:
    work.routes[vehicle].insert(pos, idx)
    work.refresh([vehicle])


def construct(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    seed: int = 0,
    config: SearchConfig | None = None,
) -> Solution:
    """Greedy cheapest-feasible-insertion construction.

    Always returns a complete assignment; when no violation-free slot exists
    the minimal-overrun slot is used and the resulting violations are carried
    on the returned solution.
    """
    config = config or SearchConfig()
    rng = random.Random(seed)
    work = _Work(instance, constraints, [[] for _ in range(instance.vehicle_count)])
    unassigned = list(range(1, instance.customer_count + 1))
    while unassigned:
        best = None  # (key, customer, vehicle, pos)
        for idx in unassigned:
            found = _best_slot(work, idx, rng, config.construct_noise, None, False)
            if found is None:
                continue
            key, (v, pos) = found
            if best is None or (key, idx) < (best[0], best[1]):
                best = (key, idx, v, pos)
        key, idx, v, pos = best
        _insert(work, idx, v, pos)
        unassigned.remove(idx)
    return build_solution(instance, work.visit_lists(), constraints)


def _construct_shuffled(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    seed: int,
    config: SearchConfig,
) -> Solution:
    """Sequential insertion in a seeded random customer order (multi-start variety)."""
    rng = random.Random(seed)
    work = _Work(instance, constraints, [[] for _ in range(instance.vehicle_count)])
    order = list(range(1, instance.customer_count + 1))
    rng.shuffle(order)
    for idx in order:
        found = _best_slot(work, idx, rng, config.construct_noise, None, False)
        _, (v, pos) = found
        _insert(work, idx, v, pos)
    return build_solution(instance, work.visit_lists(), constraints)


# ---------------------------------------------------------------------------
# Neighborhood scan (first improvement, deterministic order)
# ---------------------------------------------------------------------------

def _try_move(work: _Work, touched: list[int], current: Cost, mutate) -> Cost | None:
    saved = work.snapshot(touched)
    mutate()
    work.refresh(touched)
    if not work.protected_ok():
        work.restore(saved)
        return None
    candidate = work.total_cost()
    if _lex_better(candidate, current):
        return candidate
    work.restore(saved)
    return None


def _scan_once(work: _Work, current: Cost, ticker: _Ticker) -> Cost | None:
    """Apply the first strictly improving move found; None at a local optimum."""
    k = work.k
    # relocate
    for v_from in range(k):
        for pos in range(len(work.routes[v_from])):
            idx = work.routes[v_from][pos]
            for v_to in work.allowed_vehicles(idx):
                length = len(work.routes[v_to])
                slots = range(length) if v_to == v_from else range(length + 1)
                for ins in slots:
                    if v_to == v_from and ins == pos:
                        continue
                    ticker.tick()

                    def mutate(v_from=v_from, pos=pos, v_to=v_to, ins=ins, idx=idx):
                        del work.routes[v_from][pos]
                        work.routes[v_to].insert(ins, idx)
                        work.veh_of[idx] = v_to

                    result = _try_move(
                        work, [v_from] if v_from == v_to else [v_from, v_to], current, mutate
                    )
                    if result is not None:
                        return result
    # inter-route swap
    for v1 in range(k):
        for v2 in range(v1 + 1, k):
            for p1 in range(len(work.routes[v1])):
                c1 = work.routes[v1][p1]
                if v2 not in work.allowed_vehicles(c1):
                    continue
                for p2 in range(len(work.routes[v2])):
                    c2 = work.routes[v2][p2]
                    if v1 not in work.allowed_vehicles(c2):
                        continue
                    ticker.tick()

                    def mutate(v1=v1, v2=v2, p1=p1, p2=p2, c1=c1, c2=c2):
                        work.routes[v1][p1] = c2
                        work.routes[v2][p2] = c1

                    result = _try_move(work, [v1, v2], current, mutate)
                    if result is not None:
                        return result
    # intra-route 2-opt
    for v in range(k):
        length = len(work.routes[v])
        for i in range(length - 1):
            for j in range(i + 1, length):
                ticker.tick()

                def mutate(v=v, i=i, j=j):
                    work.routes[v][i:j + 1] = reversed(work.routes[v][i:j + 1])

                result = _try_move(work, [v], current, mutate)
                if result is not None:
                    return result
    # or-opt: move a short segment, order preserved
    for seg_len in (2, 3):
        for v_from in range(k):
            route = work.routes[v_from]
            for start in range(len(route) - seg_len + 1):
                segment = route[start:start + seg_len]
                targets = set(range(k))
                for idx in segment:
                    targets &= set(work.allowed_vehicles(idx))
                for v_to in sorted(targets):
                    length = len(work.routes[v_to])
                    slots = range(length - seg_len + 1) if v_to == v_from else range(length + 1)
                    for ins in slots:
                        if v_to == v_from and ins == start:
                            continue
                        ticker.tick()

                        def mutate(v_from=v_from, start=start, seg_len=seg_len,
                                   v_to=v_to, ins=ins, segment=tuple(segment)):
                            del work.routes[v_from][start:start + seg_len]
                            work.routes[v_to][ins:ins] = list(segment)

                        result = _try_move(
                            work, [v_from] if v_from == v_to else [v_from, v_to], current, mutate
                        )
                        if result is not None:
                            return result
    return None


def _random_slot(work: _Work, idx: int, rng: random.Random):
    """Uniform pick over admissible (vehicle, position) slots for one customer."""
    slots = []
    for v in work.allowed_vehicles(idx):
        for pos in range(len(work.routes[v]) + 1):
            if _slot_protected_ok(work, idx, v, pos):
                slots.append((v, pos))
    return rng.choice(slots) if slots else None


def _kick(work: _Work, rng: random.Random, config: SearchConfig, ticker: _Ticker, full: bool) -> None:
    """Destroy-repair diversification: remove unlocked customers and reinsert.

    Partial kicks reinsert greedily with occasional random slots; a full
    rebuild reinserts every customer at a random admissible slot, acting as a
    randomized restart that can cross barriers greedy repair never will.
    """
    unlocked = sorted(
        idx
        for route in work.routes
        for idx in route
        if idx not in work.lock
    )
    if not unlocked:
        return
    count = len(unlocked) if full else max(1, round(config.kick_fraction * len(unlocked)))
    removed = rng.sample(unlocked, count)
    for idx in removed:
        v = work.veh_of[idx]
        work.routes[v].remove(idx)
        work.veh_of[idx] = None
    work.refresh(range(work.k))
    rng.shuffle(removed)
    for idx in removed:
        slot = None
        if full or rng.random() < config.kick_random_slot_prob:
            slot = _random_slot(work, idx, rng)
        if slot is None:
            found = _best_slot(work, idx, rng, config.construct_noise, ticker, True)
            if found is None:  # protected filter can always be satisfied; defensive
                found = _best_slot(work, idx, rng, config.construct_noise, ticker, False)
            slot = found[1]
        _insert(work, idx, slot[0], slot[1])


# ---------------------------------------------------------------------------
# The improvement loop
# ---------------------------------------------------------------------------

def _protected_pairs(work: _Work) -> list[tuple[int, int]]:
    """Store orders the current state satisfies and whose endpoints can stay put."""
    protected = []
    for b, a in work.orders:
        if not work.order_satisfied(b, a):
            continue
        lock_v = work.effective_lock.get(b, work.effective_lock.get(a))
        if lock_v is not None and work.veh_of[b] != lock_v:
            continue  # pair must migrate to its locked vehicle; cannot be pinned yet
        protected.append((b, a))
    return protected


def _run_search(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    work: _Work,
    baseline_visits: list[list[str]],
    budget: SolveBudget,
    config: SearchConfig,
    progress,
    cancel,
    collector,
    prove: bool = True,
) -> SolveOutcome:
    from . import exhaustive

    started = time.perf_counter()
    iterations = 0
    emitted = [started]

    def emit(phase: str, best_obj: float | None, status: str | None = None, force: bool = False):
        if progress is None:
            return
        now = time.perf_counter()
        if not force and now - emitted[0] < config.progress_interval:
            return
        emitted[0] = now
        progress(ProgressEvent(now - started, iterations, best_obj, phase, status))

    if prove:
        decision = exhaustive.try_decide(
            instance,
            constraints,
            should_stop=(cancel.is_set if cancel is not None else None),
        )
        if cancel is not None and cancel.is_set():
            elapsed = time.perf_counter() - started
            emit(PHASE_FINISHED, None, CANCELLED, force=True)
            return SolveOutcome(CANCELLED, None, 0, elapsed)
        if decision is not None and decision[0] is False:
            elapsed = time.perf_counter() - started
            emit(PHASE_FINISHED, None, INFEASIBLE_CONSTRAINTS, force=True)
            return SolveOutcome(
                INFEASIBLE_CONSTRAINTS,
                None,
                0,
                elapsed,
                infeasible_witness=(
                    "exhaustive search over all assignments and orderings found no "
                    "feasible solution under the current constraints"
                ),
            )

    rng = random.Random(budget.random_seed)
    deadline = None if budget.wall_time_limit is None else started + budget.wall_time_limit
    best_routes = work.copy_routes()
    best_cost = work.total_cost()
    current = best_cost

    def on_beat(now):
        emit(PHASE_IMPROVING, best_cost[2] if best_cost[0] == 0 and best_cost[1] == 0 else None)

    ticker = _Ticker(deadline, cancel, on_beat, config.check_interval)
    kicks_without_best = 0
    kick_count = 0
    stop_reason = None
    if collector is not None and best_cost[0] == 0.0 and best_cost[1] == 0:
        collector(work.visit_lists(), best_cost[2])

    try:
        while budget.iteration_limit is None or iterations < budget.iteration_limit:
            iterations += 1
            result = _scan_once(work, current, ticker)
            if result is not None:
                current = result
                if _lex_better(current, best_cost):
                    best_cost = current
                    best_routes = work.copy_routes()
                    kicks_without_best = 0
                continue
            # Local optimum; rescanning an unchanged state is futile, so the
            # destroy-repair kick fires immediately instead of after a run of
            # no-op iterations.
            if collector is not None and current[0] == 0.0 and current[1] == 0:
                collector(work.visit_lists(), current[2])
            if (
                config.max_stagnant_kicks is not None
                and kicks_without_best >= config.max_stagnant_kicks
            ):
                break
            work.set_routes(best_routes)
            kick_count += 1
            _kick(work, rng, config, ticker, full=(kick_count % config.full_rebuild_every == 0))
            current = work.total_cost()
            if _lex_better(current, best_cost):
                best_cost = current
                best_routes = work.copy_routes()
                kicks_without_best = 0
            else:
                kicks_without_best += 1
    except _StopSearch as stop:
        stop_reason = stop.reason

    elapsed = time.perf_counter() - started
    solution = build_solution(instance, _routes_to_ids(instance, best_routes), constraints)
    if stop_reason == CANCELLED:
        status = CANCELLED
    elif solution.visit_lists() == baseline_visits:
        status = UNCHANGED
    else:
        baseline = build_solution(instance, baseline_visits, constraints)
        if solution.feasible and solution.objective < baseline.objective - TOLERANCE:
            status = IMPROVED
        else:
            status = BUDGET_EXHAUSTED
    emit(PHASE_FINISHED, solution.objective if solution.feasible else None, status, force=True)
    return SolveOutcome(status, solution, iterations, elapsed)


def _routes_to_ids(instance: ProblemInstance, routes: list[list[int]]) -> list[list[str]]:
    customers = instance.customers
    return [[customers[i - 1].id for i in route] for route in routes]


def improve(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    start: Solution,
    budget: SolveBudget,
    *,
    config: SearchConfig | None = None,
    progress=None,
    cancel=None,
    collector=None,
    prove: bool = True,
) -> SolveOutcome:
    """Neighborhood search from ``start`` under locks/orders; violations repaired first."""
    config = config or SearchConfig()
    work = _Work(instance, constraints, start.visit_lists())
    work.protected = _protected_pairs(work)
    return _run_search(
        instance, constraints, work, start.visit_lists(), budget, config,
        progress, cancel, collector, prove,
    )


def reoptimise(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    current: Solution,
    budget: SolveBudget,
    *,
    config: SearchConfig | None = None,
    progress=None,
    cancel=None,
    prove: bool = True,
) -> SolveOutcome:
    """Improve while preserving locked structure.

    Locked customers end on their locked vehicle, and the relative service
    order among customers locked to the same vehicle is preserved from
    ``current``; unlocked customers move freely.
    """
    config = config or SearchConfig()
    work = _Work(instance, constraints, current.visit_lists())

    # Current service order of every customer, for the stability chains.
    order_key: dict[int, tuple] = {}
    for route in current.routes:
        for pos, cid in enumerate(route.visits):
            idx = instance.index_of(cid)
            order_key[idx] = (route.timing.visits[pos].service_start, route.vehicle, pos)

    chains: dict[int, list[int]] = {}
    for idx, v in sorted(work.effective_lock.items()):
        chains.setdefault(v, []).append(idx)
    chain_pairs: list[tuple[int, int]] = []
    for v, members in sorted(chains.items()):
        members.sort(key=lambda i: order_key[i])
        chain_pairs.extend(zip(members, members[1:]))

    # Move misplaced locked customers onto their vehicles, in chain order.
    misplaced = [
        idx for idx, v in sorted(work.effective_lock.items(), key=lambda kv: order_key[kv[0]])
        if work.veh_of[idx] != v
    ]
    for idx in misplaced:
        v = work.veh_of[idx]
        work.routes[v].remove(idx)
        work.veh_of[idx] = None
    work.refresh(range(work.k))
    work.protected = list(dict.fromkeys(_protected_pairs(work) + chain_pairs))
    for idx in misplaced:
        target = work.effective_lock[idx]
        found = _best_slot(work, idx, None, 0.0, None, True, vehicles=(target,))
        if found is None:  # chain-order insertion always admits a slot; defensive
            found = _best_slot(work, idx, None, 0.0, None, False, vehicles=(target,))
        _, (v, pos) = found
        _insert(work, idx, v, pos)
    work.protected = list(dict.fromkeys(_protected_pairs(work) + chain_pairs))

    return _run_search(
        instance, constraints, work, current.visit_lists(), budget, config,
        progress, cancel, None, prove,
    )


def feasibility_attempt(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    budget: SolveBudget,
) -> Solution | None:
    """Bounded attempt to find any feasible solution; used by check_satisfiable."""
    start = construct(instance, constraints, budget.random_seed)
    if start.feasible:
        return start
    outcome = improve(instance, constraints, start, budget, prove=False)
    if outcome.solution is not None and outcome.solution.feasible:
        return outcome.solution
    return None
