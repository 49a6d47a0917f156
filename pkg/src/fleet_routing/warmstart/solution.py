"""
Solver-independent routing solutions.
[CTX:PBI-4:4-1:SOLUTION]
"""
import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.instance import DEPOT_ID, Fleet, FleetMode, Instance


class SolutionFormatError(FleetRoutingError):
    """Raised when a solution document cannot be parsed."""
    pass


@dataclass
class RoutingSolution:
    """
    Routes and deliveries of every vehicle of a fleet.

    Attributes:
        routes: Per vehicle index, visited customers in order; the depot is
                implicit at both ends and an empty list means unused
        deliveries: Per vehicle, customer id -> commodity -> integer quantity
        types: Per vehicle, the type it drives as (None for unused Flexible vehicles)
        objective: Routing cost, filled in by the producer
        construction_s: Seconds spent producing the solution
        metadata: Producer details
    """
    routes: list[list[int]]
    deliveries: list[dict[int, dict[str, int]]]
    types: list[Optional[str]]
    objective: float = 0.0
    construction_s: float = 0.0
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def empty(cls, fleet: Fleet) -> "RoutingSolution":
        return cls(
            routes=[[] for _ in fleet.vehicles],
            deliveries=[{} for _ in fleet.vehicles],
            types=[v.type_id for v in fleet.vehicles],
        )

    @property
    def n_vehicles(self) -> int:
        return len(self.routes)

    def used(self, v: int) -> bool:
        return bool(self.routes[v])

    def used_vehicles(self) -> list[int]:
        return [v for v in range(self.n_vehicles) if self.routes[v]]

    def stops(self, v: int) -> list[int]:
        """Full route of a vehicle, depot at both ends (just the depot when unused)."""
        if not self.routes[v]:
            return [DEPOT_ID]
        return [DEPOT_ID] + list(self.routes[v]) + [DEPOT_ID]

    def arcs(self, v: int) -> list[tuple[int, int]]:
        stops = self.stops(v)
        return list(zip(stops, stops[1:]))

    def load(self, v: int) -> int:
        return sum(sum(per_k.values()) for per_k in self.deliveries[v].values())

    def delivered(self, v: int, customer: int, commodity: str) -> int:
        return self.deliveries[v].get(customer, {}).get(commodity, 0)

    def copy(self) -> "RoutingSolution":
        return RoutingSolution(
            routes=[list(r) for r in self.routes],
            deliveries=[{i: dict(per_k) for i, per_k in d.items()} for d in self.deliveries],
            types=list(self.types),
            objective=self.objective,
            construction_s=self.construction_s,
            metadata=dict(self.metadata),
        )

    def to_document(self) -> dict[str, Any]:
        """Structured (JSON-compatible) form."""
        return {
            "objective": self.objective,
            "construction_s": self.construction_s,
            "metadata": self.metadata,
            "vehicles": [
                {
                    "vehicle": v,
                    "type": self.types[v],
                    "stops": self.stops(v) if self.routes[v] else [],
                    "deliveries": {
                        str(i): {k: q for k, q in per_k.items() if q}
                        for i, per_k in self.deliveries[v].items()
                        if any(per_k.values())
                    },
                }
                for v in range(self.n_vehicles)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=2, default=str)


def solution_from_document(document: str | Mapping[str, Any]) -> RoutingSolution:
    """
    Parse a solution document produced by `RoutingSolution.to_document`.

    Raises:
        SolutionFormatError: On malformed documents
    """
    try:
        data = json.loads(document) if isinstance(document, str) else document
        routes, deliveries, types = [], [], []
        for entry in sorted(data["vehicles"], key=lambda e: e["vehicle"]):
            stops = [int(s) for s in entry.get("stops", [])]
            if stops and (stops[0] != DEPOT_ID or stops[-1] != DEPOT_ID):
                raise SolutionFormatError(f"Route of vehicle {entry['vehicle']} must start and end at the depot")
            routes.append(stops[1:-1])
            deliveries.append({
                int(i): {str(k): int(q) for k, q in per_k.items()}
                for i, per_k in entry.get("deliveries", {}).items()
            })
            types.append(entry.get("type"))
        return RoutingSolution(
            routes=routes,
            deliveries=deliveries,
            types=types,
            objective=float(data.get("objective", 0.0)),
            construction_s=float(data.get("construction_s", 0.0)),
            metadata=dict(data.get("metadata", {})),
        )
    except SolutionFormatError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise SolutionFormatError(f"Invalid solution document: {e}") from e


def vehicle_cost(inst: Instance, fleet: Fleet, solution: RoutingSolution, v: int) -> float:
    """Per-km cost of vehicle v as it drives in this solution."""
    if fleet.mode is FleetMode.STABLE:
        return fleet.vehicles[v].cost_per_km
    type_id = solution.types[v]
    if type_id is None:
        return 0.0
    return fleet.type_of(type_id).cost_per_km


def vehicle_capacity(fleet: Fleet, solution: RoutingSolution, v: int) -> int:
    if fleet.mode is FleetMode.STABLE:
        return fleet.vehicles[v].capacity
    type_id = solution.types[v]
    if type_id is None:
        return 0
    return fleet.type_of(type_id).capacity


def vehicle_compatible(fleet: Fleet, solution: RoutingSolution, v: int) -> frozenset[str]:
    if fleet.mode is FleetMode.STABLE:
        return fleet.vehicles[v].compatible
    type_id = solution.types[v]
    if type_id is None:
        return frozenset()
    return fleet.type_of(type_id).compatible


def route_cost(inst: Instance, fleet: Fleet, solution: RoutingSolution, v: int) -> float:
    if not solution.routes[v]:
        return 0.0
    length = sum(inst.distance(a, b) for a, b in solution.arcs(v))
    return vehicle_cost(inst, fleet, solution, v) * length
