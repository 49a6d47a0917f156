"""
Solver-independent solution checks and the exact brute-force oracle.
[CTX:PBI-5:5-1:CHECKER]

Validation failures are verdicts collected in a report, never exceptions.
The oracle enumerates route structures for tiny instances; delivery
quantities for a fixed structure are decided by max-flow, so the first
feasible structure in cost order is optimal.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.delivery import assign_deliveries
from fleet_routing.instance import DEPOT_ID, ORACLE_MAX_VEHICLES, Fleet, FleetMode, Instance, VehicleType
from fleet_routing.warmstart.solution import (
    RoutingSolution,
    route_cost,
    vehicle_capacity,
    vehicle_compatible,
)

logger = logging.getLogger(__name__)

ORACLE_MAX_CUSTOMERS = 5
CHECKS = ("vehicles", "connectivity", "linkage", "compatibility", "capacity", "demand")


class OracleGuardError(FleetRoutingError):
    """Raised when an instance is too large for exhaustive enumeration."""
    pass


class OracleInfeasibleError(FleetRoutingError):
    """Raised when no route structure can serve the demand."""
    pass


@dataclass
class CheckVerdict:
    """Outcome of one family of checks."""
    name: str
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, message: str) -> None:
        self.failures.append(message)


@dataclass
class ValidationReport:
    """
    Verdicts of `validate_solution`.

    The report passes exactly when every check passes.
    """
    checks: dict[str, CheckVerdict]
    objective: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks.values())

    def __getitem__(self, name: str) -> CheckVerdict:
        return self.checks[name]

    @property
    def failures(self) -> list[str]:
        return [f"{name}: {msg}" for name, check in self.checks.items() for msg in check.failures]

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "objective": self.objective,
            "checks": {name: check.failures for name, check in self.checks.items()},
        }


def objective_of(inst: Instance, fleet: Fleet, solution: RoutingSolution) -> float:
    """
    Sum over used arcs of cost_v * dist.

    Raises:
        InstanceValidationError: If a route references an unknown location
    """
    return sum(route_cost(inst, fleet, solution, v) for v in range(solution.n_vehicles))


def validate_solution(inst: Instance, fleet: Fleet, solution: RoutingSolution) -> ValidationReport:
    """Check a solution against every routing and delivery constraint."""
    checks = {name: CheckVerdict(name) for name in CHECKS}
    known = set(inst.customer_ids)
    commodities = set(inst.commodities)

    if solution.n_vehicles != fleet.size:
        checks["vehicles"].fail(f"{solution.n_vehicles} vehicles in solution, fleet has {fleet.size}")
    if len(solution.deliveries) != solution.n_vehicles or len(solution.types) != solution.n_vehicles:
        checks["vehicles"].fail("routes, deliveries and types have different lengths")
    n = min(solution.n_vehicles, fleet.size, len(solution.deliveries), len(solution.types))

    routes_ok = True
    for v in range(n):
        route = solution.routes[v]
        type_id = solution.types[v]
        if fleet.mode is FleetMode.STABLE:
            if type_id is not None and type_id != fleet.vehicles[v].type_id:
                checks["vehicles"].fail(f"vehicle {v} belongs to pool {fleet.vehicles[v].type_id}, not {type_id}")
        elif route and type_id not in {vt.id for vt in fleet.types}:
            checks["vehicles"].fail(f"vehicle {v} is used without a valid type ({type_id!r})")
            routes_ok = False

        if DEPOT_ID in route:
            checks["connectivity"].fail(f"vehicle {v} returns to the depot mid-route")
            routes_ok = False
        unknown = [i for i in route if i not in known and i != DEPOT_ID]
        if unknown:
            checks["connectivity"].fail(f"vehicle {v} visits unknown locations {unknown}")
            routes_ok = False
        if len(set(route)) != len(route):
            checks["connectivity"].fail(f"vehicle {v} visits a customer more than once: {route}")

        visited = set(route)
        if fleet.mode is FleetMode.FLEXIBLE and type_id not in {vt.id for vt in fleet.types}:
            capacity, compatible = 0, frozenset()
        else:
            capacity = vehicle_capacity(fleet, solution, v)
            compatible = vehicle_compatible(fleet, solution, v)
        load = 0
        for customer, per_k in solution.deliveries[v].items():
            for commodity, qty in per_k.items():
                if qty < 0:
                    checks["linkage"].fail(f"negative delivery y[{v},{customer},{commodity}] = {qty}")
                    continue
                if qty == 0:
                    continue
                if customer not in known or commodity not in commodities:
                    checks["linkage"].fail(f"vehicle {v} delivers to unknown ({customer}, {commodity})")
                    continue
                if customer not in visited:
                    checks["linkage"].fail(f"vehicle {v} delivers {commodity} to {customer} without visiting it")
                if commodity not in compatible:
                    checks["compatibility"].fail(f"vehicle {v} cannot carry {commodity}")
                load += qty
        if load > capacity:
            checks["capacity"].fail(f"vehicle {v} carries {load} > capacity {capacity}")

    for customer in inst.customers:
        for commodity in inst.commodities:
            delivered = sum(
                solution.deliveries[v].get(customer.id, {}).get(commodity, 0) for v in range(n)
            )
            if delivered != customer.dem(commodity):
                checks["demand"].fail(
                    f"demand[i={customer.id},k={commodity}]: delivered {delivered}, "
                    f"demand {customer.dem(commodity)}"
                )

    objective = objective_of(inst, fleet, solution) if routes_ok and n == solution.n_vehicles else None
    report = ValidationReport(checks=checks, objective=objective)
    if not report.passed:
        logger.debug(f"[CTX:PBI-5:5-1:CHECKER] {inst.name}: {report.failures}")
    return report


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _RouteOption:
    cost: float
    type_id: Optional[str]
    customers: frozenset[int]
    tour: tuple[int, ...]


def _best_tours(inst: Instance) -> dict[frozenset[int], tuple[float, tuple[int, ...]]]:
    """Shortest depot-anchored tour over every non-empty customer subset."""
    best = {}
    ids = inst.customer_ids
    for size in range(1, len(ids) + 1):
        for subset in itertools.combinations(ids, size):
            shortest = None
            for order in itertools.permutations(subset):
                stops = (DEPOT_ID,) + order + (DEPOT_ID,)
                length = sum(inst.distance(a, b) for a, b in zip(stops, stops[1:]))
                if shortest is None or length < shortest[0] - 1e-12:
                    shortest = (length, order)
            best[frozenset(subset)] = shortest
    return best


def _options(types: list[VehicleType], tours) -> list[_RouteOption]:
    options = [_RouteOption(0.0, None, frozenset(), ())]
    for vt in types:
        for subset, (length, order) in tours.items():
            options.append(_RouteOption(vt.cost_per_km * length, vt.id, subset, order))
    return options


def _vehicle_classes(fleet: Fleet) -> list[tuple[list[int], list[VehicleType]]]:
    """Groups of interchangeable vehicles with the types they may take."""
    if fleet.mode is FleetMode.FLEXIBLE:
        return [([v.index for v in fleet.vehicles], list(fleet.types))]
    return [
        ([v.index for v in fleet.pool(vt.id)], [vt])
        for vt in fleet.types
        if fleet.pool(vt.id)
    ]


def brute_force_optimum(
    inst: Instance,
    fleet: Fleet,
    max_used: Optional[int] = None,
) -> tuple[float, RoutingSolution]:
    """
    Exact optimum by enumeration.

    Every vehicle either stays home or drives the shortest tour over some
    customer subset with one of its admissible types. Structures are
    enumerated up to relabelling of interchangeable vehicles and tried in
    increasing cost; deliveries come from a max-flow over visited sets.

    Args:
        inst: Instance with at most 5 customers
        fleet: Fleet with at most 3 vehicles
        max_used: Optional cap on the number of used vehicles

    Returns:
        (optimal cost, an optimal solution)

    Raises:
        OracleGuardError: Beyond the size guard
        OracleInfeasibleError: If no structure serves the demand
    """
    if inst.n_customers > ORACLE_MAX_CUSTOMERS or fleet.size > ORACLE_MAX_VEHICLES:
        raise OracleGuardError(
            f"Oracle handles at most {ORACLE_MAX_CUSTOMERS} customers and "
            f"{ORACLE_MAX_VEHICLES} vehicles, got {inst.n_customers} and {fleet.size}"
        )
    tours = _best_tours(inst)
    classes = _vehicle_classes(fleet)
    per_class = []
    for vehicles, types in classes:
        options = _options(types, tours)
        picks = list(itertools.combinations_with_replacement(range(len(options)), len(vehicles)))
        per_class.append((options, picks))

    combos = []
    for choice in itertools.product(*(picks for _, picks in per_class)):
        cost = 0.0
        for (options, _), picks in zip(per_class, choice):
            cost += sum(options[p].cost for p in picks)
        combos.append((cost, choice))
    combos.sort(key=lambda item: (item[0], item[1]))

    demanded = {
        (c.id, k) for c in inst.customers for k in inst.commodities if c.dem(k) > 0
    }
    total = inst.total_demand()
    for cost, choice in combos:
        assigned: list[tuple[int, _RouteOption]] = []
        for (vehicles, _), (options, _), picks in zip(classes, per_class, choice):
            # Used vehicles take the lowest indices of their class
            chosen = sorted((options[p] for p in picks), key=lambda o: (not o.customers, o.type_id or "", o.cost))
            assigned.extend(zip(vehicles, chosen))
        used = [(v, o) for v, o in assigned if o.customers]
        if max_used is not None and len(used) > max_used:
            continue
        capacities = {v: (fleet.type_of(o.type_id).capacity if o.customers else 0) for v, o in assigned}
        compatible = {
            v: (fleet.type_of(o.type_id).compatible if o.customers else frozenset()) for v, o in assigned
        }
        if sum(capacities.values()) < total:
            continue
        if any(
            not any(i in o.customers and k in compatible[v] for v, o in used) for i, k in demanded
        ):
            continue
        order = sorted(v for v, _ in assigned)
        by_vehicle = dict(assigned)
        visits = [sorted(by_vehicle[v].customers) for v in order]
        deliveries = assign_deliveries(
            inst, visits, [capacities[v] for v in order], [compatible[v] for v in order]
        )
        if deliveries is None:
            continue
        solution = RoutingSolution(
            routes=[list(by_vehicle[v].tour) for v in order],
            deliveries=deliveries,
            types=[
                by_vehicle[v].type_id if fleet.mode is FleetMode.FLEXIBLE else fleet.vehicles[v].type_id
                for v in order
            ],
            metadata={"producer": "oracle"},
        )
        solution.objective = objective_of(inst, fleet, solution)
        logger.debug(f"[CTX:PBI-5:5-1:CHECKER] Oracle optimum for {inst.name}: {solution.objective:.6f}")
        return solution.objective, solution
    raise OracleInfeasibleError(f"No route structure serves the demand of {inst.name}")


def random_feasible_solution(
    inst: Instance,
    fleet: Fleet,
    rng: np.random.Generator,
    attempts: int = 200,
) -> RoutingSolution:
    """
    A random solution that passes `validate_solution`.

    Each attempt picks types (Flexible), a random set of visiting vehicles per
    customer and random route orders, then lets max-flow split the demand.

    Raises:
        OracleInfeasibleError: If no attempt yields a feasible solution
    """
    n = fleet.size
    for _ in range(attempts):
        if fleet.mode is FleetMode.FLEXIBLE:
            types = [fleet.types[int(rng.integers(len(fleet.types)))] for _ in range(n)]
        else:
            types = [fleet.type_of(v.type_id) for v in fleet.vehicles]
        visits: list[list[int]] = [[] for _ in range(n)]
        for customer in inst.customers:
            needed = [k for k in inst.commodities if customer.dem(k) > 0]
            chosen = [v for v in range(n) if rng.random() < 0.5]
            for k in needed:
                if not any(k in types[v].compatible for v in chosen):
                    able = [v for v in range(n) if k in types[v].compatible]
                    if not able:
                        break
                    chosen.append(able[int(rng.integers(len(able)))])
            for v in sorted(set(chosen)):
                visits[v].append(customer.id)
        for route in visits:
            rng.shuffle(route)
        capacities = [types[v].capacity if visits[v] else 0 for v in range(n)]
        compatible = [types[v].compatible if visits[v] else frozenset() for v in range(n)]
        deliveries = assign_deliveries(inst, visits, capacities, compatible)
        if deliveries is None:
            continue
        solution = RoutingSolution(
            routes=visits,
            deliveries=deliveries,
            types=[
                (types[v].id if visits[v] else None) if fleet.mode is FleetMode.FLEXIBLE else types[v].id
                for v in range(n)
            ],
            metadata={"producer": "random"},
        )
        solution.objective = objective_of(inst, fleet, solution)
        return solution
    raise OracleInfeasibleError(f"No random feasible solution found for {inst.name} in {attempts} attempts")


def relative_difference(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|, 1e-9)."""
    return abs(a - b) / max(abs(a), abs(b), 1e-9)

