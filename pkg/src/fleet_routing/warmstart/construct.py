"""
Greedy construction of a first feasible solution.
[CTX:PBI-4:4-2:CONSTRUCT]

Demand is placed chunk by chunk with cheapest insertion: the most
restrictive commodity first, customers by decreasing total demand. A chunk
is cut to the chosen vehicle's remaining capacity, so large demands split
across vehicles. When the greedy pass gets stuck, a max-flow over "every
vehicle visits every customer" decides whether the fleet can serve the
demand at all.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from fleet_routing.checker import objective_of
from fleet_routing.core.clock import SystemTimeProvider, TimeProvider
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.delivery import assign_deliveries, shortfall_commodity
from fleet_routing.instance import Customer, Fleet, FleetMode, Instance, VehicleType
from fleet_routing.warmstart.routes import cheapest_insertion, nearest_neighbour, two_opt
from fleet_routing.warmstart.solution import RoutingSolution

logger = logging.getLogger(__name__)


class CapacityShortfallError(FleetRoutingError):
    """Raised when the fleet cannot carry the demand."""

    def __init__(self, message: str, commodity: Optional[str] = None):
        super().__init__(message)
        self.commodity = commodity


class InsertionFailed(FleetRoutingError):
    """Raised when no vehicle can take the rest of a chunk."""

    def __init__(self, commodity: str):
        super().__init__(f"No vehicle can take more '{commodity}'")
        self.commodity = commodity


@dataclass
class _Move:
    cost: float
    vehicle: int
    vtype: VehicleType
    position: int


class InsertionState:
    """
    Mutable partial solution used by construction and LNS repair.

    In Flexible mode an empty vehicle has no type; it takes one when the
    first chunk is inserted and loses it again when emptied.
    """

    def __init__(self, inst: Instance, fleet: Fleet):
        self.inst = inst
        self.fleet = fleet
        n = fleet.size
        self.routes: list[list[int]] = [[] for _ in range(n)]
        self.deliveries: list[dict[int, dict[str, int]]] = [{} for _ in range(n)]
        self.types: list[Optional[VehicleType]] = [
            fleet.type_of(v.type_id) if fleet.mode is FleetMode.STABLE else None
            for v in fleet.vehicles
        ]
        self.loads = [0] * n

    @classmethod
    def from_solution(cls, inst: Instance, fleet: Fleet, solution: RoutingSolution) -> "InsertionState":
        state = cls(inst, fleet)
        for v in range(fleet.size):
            state.routes[v] = list(solution.routes[v])
            state.deliveries[v] = {i: dict(per_k) for i, per_k in solution.deliveries[v].items()}
            state.loads[v] = solution.load(v)
            if fleet.mode is FleetMode.FLEXIBLE:
                type_id = solution.types[v]
                state.types[v] = fleet.type_of(type_id) if type_id and solution.routes[v] else None
        return state

    def remove_customers(self, customers: Sequence[int]) -> None:
        """Drop every visit to the given customers along with their deliveries."""
        gone = set(customers)
        for v in range(self.fleet.size):
            self.routes[v] = [i for i in self.routes[v] if i not in gone]
            for i in gone & set(self.deliveries[v]):
                self.loads[v] -= sum(self.deliveries[v].pop(i).values())
            if not self.routes[v] and self.fleet.mode is FleetMode.FLEXIBLE:
                self.types[v] = None

    def _candidate_types(self, v: int, commodity: str) -> list[VehicleType]:
        current = self.types[v]
        if current is not None:
            return [current] if commodity in current.compatible else []
        return [vt for vt in self.fleet.types if commodity in vt.compatible]

    def best_move(self, customer: int, commodity: str) -> Optional[_Move]:
        """Cheapest vehicle (and type) to receive a chunk; ties by lowest vehicle index."""
        best: Optional[_Move] = None
        for v in range(self.fleet.size):
            for vt in self._candidate_types(v, commodity):
                if vt.capacity - self.loads[v] <= 0:
                    continue
                delta, position = cheapest_insertion(self.inst, self.routes[v], customer)
                move = _Move(delta * vt.cost_per_km, v, vt, position)
                # Scanned in vehicle then type order, so ties keep the lowest index
                if best is None or move.cost < best.cost - 1e-12:
                    best = move
        return best

    def place(self, customer: int, commodity: str, quantity: int) -> None:
        """
        Deliver a quantity, splitting across vehicles as capacity runs out.

        Raises:
            InsertionFailed: When no vehicle can take the remainder
        """
        residual = quantity
        while residual > 0:
            move = self.best_move(customer, commodity)
            if move is None:
                raise InsertionFailed(commodity)
            v = move.vehicle
            self.types[v] = move.vtype
            if move.position >= 0:
                self.routes[v].insert(move.position, customer)
            chunk = min(residual, move.vtype.capacity - self.loads[v])
            per_k = self.deliveries[v].setdefault(customer, {})
            per_k[commodity] = per_k.get(commodity, 0) + chunk
            self.loads[v] += chunk
            residual -= chunk

    def to_solution(self) -> RoutingSolution:
        types = [
            (vt.id if vt is not None else None) if self.fleet.mode is FleetMode.FLEXIBLE else vt.id
            for vt in self.types
        ]
        solution = RoutingSolution(
            routes=[list(r) for r in self.routes],
            deliveries=[{i: dict(per_k) for i, per_k in d.items()} for d in self.deliveries],
            types=types,
        )
        solution.objective = objective_of(self.inst, self.fleet, solution)
        return solution


def commodity_order(inst: Instance, fleet: Fleet) -> list[str]:
    """Most restrictive commodity first: fewest compatible types, then least capacity."""
    def key(item):
        index, commodity = item
        n_types = sum(1 for vt in fleet.types if commodity in vt.compatible)
        return (n_types, fleet.total_capacity(commodity), index)

    return [k for _, k in sorted(enumerate(inst.commodities), key=key)]


def customer_order(customers: Sequence[Customer], rng: np.random.Generator) -> list[Customer]:
    """Decreasing total demand; equal demands in seeded random order."""
    shuffled = [customers[p] for p in rng.permutation(len(customers))]
    return sorted(shuffled, key=lambda c: -c.total_demand)


def _flow_fallback(inst: Instance, fleet: Fleet) -> RoutingSolution:
    """Let max-flow split the demand when greedy insertion gets stuck."""
    n = fleet.size
    if fleet.mode is FleetMode.STABLE:
        layouts = [[fleet.type_of(v.type_id) for v in fleet.vehicles]]
    else:
        # One type for the whole fleet, most versatile first
        layouts = [[vt] * n for vt in fleet.types]

    everyone = inst.customer_ids
    for types in layouts:
        capacities = [vt.capacity for vt in types]
        compatible = [vt.compatible for vt in types]
        deliveries = assign_deliveries(inst, [everyone] * n, capacities, compatible)
        if deliveries is None:
            continue
        routes = [two_opt(inst, nearest_neighbour(inst, sorted(deliveries[v]))) for v in range(n)]
        solution = RoutingSolution(
            routes=routes,
            deliveries=deliveries,
            types=[
                vt.id if (routes[v] or fleet.mode is FleetMode.STABLE) else None
                for v, vt in enumerate(types)
            ],
            metadata={"producer": "flow"},
        )
        solution.objective = objective_of(inst, fleet, solution)
        return solution

    capacities = [fleet.total_capacity(k) for k in inst.commodities]
    commodity = next(
        (k for k, cap in zip(inst.commodities, capacities) if inst.total_demand(k) > cap),
        None,
    )
    if commodity is None and fleet.mode is FleetMode.STABLE:
        commodity = shortfall_commodity(
            inst, [v.capacity for v in fleet.vehicles], [v.compatible for v in fleet.vehicles]
        )
    what = f"commodity '{commodity}'" if commodity else "the combined demand"
    raise CapacityShortfallError(f"Fleet of {n} vehicles cannot carry {what} of {inst.name}", commodity)


def construct_initial(
    inst: Instance,
    fleet: Fleet,
    seed: int = 0,
    time_provider: Optional[TimeProvider] = None,
) -> RoutingSolution:
    """
    Build a feasible solution by greedy cheapest insertion with splitting.

    Args:
        inst: Instance to serve
        fleet: Fleet to route
        seed: Orders customers of equal demand
        time_provider: Clock for `construction_s`

    Returns:
        Feasible RoutingSolution with objective and construction time set

    Raises:
        CapacityShortfallError: If no split of the demand fits the fleet
    """
    clock = time_provider or SystemTimeProvider()
    started = clock.now()
    rng = np.random.default_rng(seed)
    state = InsertionState(inst, fleet)
    customers = customer_order(inst.customers, rng)
    try:
        for commodity in commodity_order(inst, fleet):
            for customer in customers:
                state.place(customer.id, commodity, customer.dem(commodity))
        solution = state.to_solution()
        solution.metadata["producer"] = "greedy"
    except InsertionFailed as stuck:
        logger.info(
            f"[CTX:PBI-4:4-2:CONSTRUCT] {inst.name}: greedy insertion stuck on "
            f"'{stuck.commodity}', falling back to max-flow"
        )
        solution = _flow_fallback(inst, fleet)
    solution.construction_s = clock.now() - started
    solution.metadata["seed"] = seed
    logger.debug(
        f"[CTX:PBI-4:4-2:CONSTRUCT] {inst.name}: initial cost {solution.objective:.2f} "
        f"with {len(solution.used_vehicles())} vehicles"
    )
    return solution
