"""
Large neighbourhood search over routing solutions.
[CTX:PBI-4:4-3:LNS]

Each iteration removes a share of the customers with one destroy operator,
re-inserts them greedily with splitting, polishes every route with 2-opt and
keeps the result only when it is strictly cheaper.
"""
import logging
from typing import Callable, Optional

import numpy as np

from fleet_routing.core.clock import Deadline, SystemTimeProvider, TimeProvider
from fleet_routing.core.config import WarmstartSettings
from fleet_routing.core.telemetry import EventKind, TelemetryRecorder, create_event, get_recorder
from fleet_routing.instance import Fleet, Instance
from fleet_routing.warmstart.construct import InsertionState, InsertionFailed, commodity_order
from fleet_routing.warmstart.routes import removal_saving, two_opt
from fleet_routing.warmstart.solution import RoutingSolution, vehicle_cost

logger = logging.getLogger(__name__)

DestroyOperator = Callable[[Instance, Fleet, RoutingSolution, int, np.random.Generator], list[int]]


def destroy_random(inst: Instance, fleet: Fleet, solution: RoutingSolution, count: int, rng: np.random.Generator) -> list[int]:
    """Uniformly random customers."""
    ids = inst.customer_ids
    picks = rng.choice(len(ids), size=min(count, len(ids)), replace=False)
    return sorted(ids[p] for p in picks)


def destroy_worst(inst: Instance, fleet: Fleet, solution: RoutingSolution, count: int, rng: np.random.Generator) -> list[int]:
    """Customers whose visits cost the most, summed over the vehicles visiting them."""
    saving = {i: 0.0 for i in inst.customer_ids}
    for v in solution.used_vehicles():
        cost = vehicle_cost(inst, fleet, solution, v)
        for i in solution.routes[v]:
            saving[i] += cost * removal_saving(inst, solution.routes[v], i)
    ranked = sorted(saving, key=lambda i: (-saving[i], i))
    return sorted(ranked[:count])


def destroy_segment(inst: Instance, fleet: Fleet, solution: RoutingSolution, count: int, rng: np.random.Generator) -> list[int]:
    """A contiguous stretch of one used route."""
    used = solution.used_vehicles()
    if not used:
        return []
    route = solution.routes[used[int(rng.integers(len(used)))]]
    length = min(count, len(route))
    start = int(rng.integers(len(route) - length + 1))
    return sorted(route[start:start + length])


DESTROY_OPERATORS: dict[str, DestroyOperator] = {
    "random": destroy_random,
    "worst": destroy_worst,
    "segment": destroy_segment,
}


def repair(
    inst: Instance,
    fleet: Fleet,
    solution: RoutingSolution,
    removed: list[int],
    rng: np.random.Generator,
) -> Optional[RoutingSolution]:
    """
    Re-insert removed customers greedily, in random order.

    Returns:
        The repaired solution with 2-opt-polished routes, or None when some
        chunk cannot be placed
    """
    state = InsertionState.from_solution(inst, fleet, solution)
    state.remove_customers(removed)
    order = [removed[p] for p in rng.permutation(len(removed))]
    try:
        for commodity in commodity_order(inst, fleet):
            for customer in order:
                state.place(customer, commodity, inst.dem(customer, commodity))
    except InsertionFailed:
        return None
    state.routes = [two_opt(inst, route) for route in state.routes]
    return state.to_solution()


def lns_improve(
    inst: Instance,
    fleet: Fleet,
    solution: RoutingSolution,
    budget_s: float,
    seed: int = 0,
    settings: Optional[WarmstartSettings] = None,
    time_provider: Optional[TimeProvider] = None,
    recorder: Optional[TelemetryRecorder] = None,
    run_id: str = "lns",
) -> RoutingSolution:
    """
    Improve a feasible solution within a time budget.

    Args:
        inst: Instance
        fleet: Fleet the solution routes
        solution: Feasible starting solution
        budget_s: Seconds to spend; 0 returns `solution` unchanged
        seed: Seed of the operator, removal and re-insertion choices
        settings: Destroy share, operator weights and optional iteration cap
        time_provider: Clock for the budget
        recorder: Telemetry sink for improvement events
        run_id: Identifier used in telemetry events

    Returns:
        Best solution found; its objective never exceeds the input's
    """
    if budget_s <= 0 or inst.n_customers == 0:
        return solution
    settings = settings or WarmstartSettings()
    recorder = recorder or get_recorder()
    clock = time_provider or SystemTimeProvider()
    deadline = Deadline(budget_s, clock)
    rng = np.random.default_rng(seed)

    names = [name for name in DESTROY_OPERATORS if settings.operators.get(name, 0) > 0]
    if not names:
        logger.warning("[CTX:PBI-4:4-3:LNS] No destroy operator has positive weight; skipping LNS")
        return solution
    weights = np.array([settings.operators[name] for name in names], dtype=float)
    weights /= weights.sum()
    count = max(1, int(round(settings.destroy_fraction * inst.n_customers)))

    best = solution.copy()
    iterations = improvements = 0
    while not deadline.expired():
        if settings.max_iterations is not None and iterations >= settings.max_iterations:
            break
        iterations += 1
        name = names[int(rng.choice(len(names), p=weights))]
        removed = DESTROY_OPERATORS[name](inst, fleet, best, count, rng)
        if not removed:
            continue
        candidate = repair(inst, fleet, best, removed, rng)
        if candidate is None or candidate.objective >= best.objective - 1e-9:
            continue
        improvements += 1
        best = candidate
        recorder.record(create_event(
            run_id=run_id,
            source="lns",
            kind=EventKind.HEURISTIC,
            wall_s=deadline.elapsed(),
            value=best.objective,
            detail={"operator": name, "iteration": iterations},
        ))

    best.metadata = {
        **solution.metadata,
        "producer": "lns",
        "lns_iterations": iterations,
        "lns_improvements": improvements,
        "lns_seed": seed,
    }
    best.construction_s = solution.construction_s + deadline.elapsed()
    logger.info(
        f"[CTX:PBI-4:4-3:LNS] {inst.name}: {solution.objective:.2f} -> {best.objective:.2f} "
        f"after {iterations} iterations ({improvements} improvements)"
    )
    return best
