"""Diverse solution pools: multi-start search plus greedy max-min selection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ..errors import InfeasibleConstraints
from ..instance import TOLERANCE, ProblemInstance
from ..solution import Solution, build_solution, diversity
from . import exhaustive
from .search import SearchConfig, SolveBudget, construct, _construct_shuffled, improve

if TYPE_CHECKING:
    from ..constraints import SideConstraints


@dataclass(frozen=True)
class DiverseResult:
    solutions: list[Solution]
    note: str | None = None  # set when the pool ran out before k solutions


def diversity_matrix(solutions: list[Solution]) -> np.ndarray:
    n = len(solutions)
    m = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = diversity(solutions[i], solutions[j])
    return m


def select_max_min(pool: list[Solution], k: int, first: int | None = None) -> list[int]:
    """Greedy max-min selection over a candidate pool, returned as pool indices.

    The first pick is the given index (or the lowest-objective candidate, ties
    broken by pool order); every later pick maximises the minimum diversity to
    all previously selected solutions, ties broken by lower objective, then
    pool order.
    """
    if not pool or k < 1:
        return []
    if first is None:
        first = min(range(len(pool)), key=lambda i: (pool[i].objective, i))
    selected = [first]
    min_div = [diversity(pool[i], pool[first]) if i != first else 0.0 for i in range(len(pool))]
    while len(selected) < min(k, len(pool)):
        candidates = [i for i in range(len(pool)) if i not in selected]
        best = max(candidates, key=lambda i: (min_div[i], -pool[i].objective, -i))
        selected.append(best)
        for i in candidates:
            if i != best:
                d = diversity(pool[i], pool[best])
                if d < min_div[i]:
                    min_div[i] = d
    return selected


def select_degraded(pool: list[Solution], k: int) -> list[int]:
    """Deliberately poor seeds: the worst in-margin candidates, diversified.

    Candidates at (or within 2% of) the pool's best objective are avoided so a
    later re-optimisation can strictly improve every seed; they are used only
    when the pool holds nothing else.
    """
    if not pool or k < 1:
        return []
    best_obj = min(s.objective for s in pool)
    eligible = [i for i in range(len(pool)) if pool[i].objective > best_obj * 1.02]
    if len(eligible) < k:
        leftovers = sorted(
            (i for i in range(len(pool)) if i not in eligible),
            key=lambda i: (-pool[i].objective, i),
        )
        eligible.extend(leftovers[: k - len(eligible)])
    sub = [pool[i] for i in eligible]
    first = max(range(len(sub)), key=lambda i: (sub[i].objective, -i))
    picked = select_max_min(sub, k, first=first)
    return [eligible[i] for i in picked]


def build_pool(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    budget: SolveBudget,
    config: SearchConfig | None = None,
) -> list[Solution]:
    """Collect distinct feasible solutions from seeded multi-start improve runs.

    The pool holds every distinct feasible local optimum encountered plus the
    construction starts and final bests, in first-seen order.
    """
    config = config or SearchConfig()
    seen: dict[tuple, int] = {}
    pool: list[Solution] = []

    def collect(visit_lists: list[list[str]], _objective: float) -> None:
        if len(pool) >= config.pool_capacity:
            return
        key = tuple(tuple(v) for v in visit_lists)
        if key in seen:
            return
        seen[key] = len(pool)
        pool.append(build_solution(instance, visit_lists, constraints))

    starts = max(1, config.diverse_starts)
    per_iter = None
    if budget.iteration_limit is not None:
        per_iter = max(1, budget.iteration_limit // starts)
    per_wall = None
    if budget.wall_time_limit is not None:
        per_wall = budget.wall_time_limit / starts
    for i in range(starts):
        seed = budget.random_seed + i
        if i == 0:
            start = construct(instance, constraints, seed, config)
        else:
            start = _construct_shuffled(instance, constraints, seed, config)
        if start.feasible:
            collect(start.visit_lists(), start.objective)
        sub_budget = SolveBudget(
            wall_time_limit=per_wall, iteration_limit=per_iter, random_seed=seed
        )
        outcome = improve(
            instance, constraints, start, sub_budget,
            config=config, collector=collect, prove=(i == 0),
        )
        if outcome.status == "infeasible_constraints":
            raise InfeasibleConstraints(outcome.infeasible_witness or "constraints unsatisfiable")
        if outcome.solution is not None and outcome.solution.feasible:
            collect(outcome.solution.visit_lists(), outcome.solution.objective)
    return pool


def generate_diverse(
    instance: ProblemInstance,
    constraints: "SideConstraints",
    k: int,
    quality_margin: float,
    budget: SolveBudget,
    config: SearchConfig | None = None,
    selection: str = "best_first",
) -> DiverseResult:
    """k diverse solutions: best found first, then greedy max-min picks among
    candidates whose objective is within (1 + quality_margin) x best."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if quality_margin < 0:
        raise ValueError("quality_margin must be non-negative")
    pool = build_pool(instance, constraints, budget, config)
    if not pool:
        return DiverseResult([], note="no feasible solutions found within budget")
    best_obj = min(s.objective for s in pool)
    filtered = [s for s in pool if s.objective <= best_obj * (1.0 + quality_margin) + TOLERANCE]
    if selection == "degraded":
        indices = select_degraded(filtered, k)
    else:
        indices = select_max_min(filtered, k)
    solutions = [filtered[i] for i in indices]
    note = None
    if len(solutions) < k:
        note = f"pool exhausted: returning {len(solutions)} of {k} requested solutions"
    return DiverseResult(solutions, note)
