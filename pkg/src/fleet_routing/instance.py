"""
Problem instances: entities, loading, generation, aggregation and fleet sizing.
[CTX:PBI-1:1-1:INSTANCE]

Quantities (demands, capacities) are integers counted in units of
`1 / Instance.scale`, so demand-satisfaction checks stay exact. Distances and
costs are floats.

Location ids: the depot is always id 0, customers carry ids >= 1. The distance
matrix is indexed by *position* (0 = depot, p = p-th customer in
`Instance.customers`), and the customer order is meaningful to the ordering
constraints of the strengthened models.
"""
import json
import logging
import math
from dataclasses import dataclass, field, replace
from decimal import Decimal
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from fleet_routing.core.errors import FleetRoutingError

logger = logging.getLogger(__name__)

DEPOT_ID = 0


class InstanceValidationError(FleetRoutingError):
    """Raised when an instance document or object breaks the schema or an invariant."""
    pass


class FleetSizingError(FleetRoutingError):
    """Raised when a fleet cannot be sized for an instance."""
    pass


@dataclass(frozen=True)
class Customer:
    """
    A customer location with a per-commodity demand.

    Attributes:
        id: Location id (>= 1)
        x: Abscissa in km
        y: Ordinate in km
        demand: Integer quantity per commodity (every commodity present, zeros allowed)
    """
    id: int
    x: float
    y: float
    demand: dict[str, int]

    def dem(self, commodity: str) -> int:
        return self.demand.get(commodity, 0)

    @property
    def total_demand(self) -> int:
        return sum(self.demand.values())


@dataclass(frozen=True)
class VehicleType:
    """
    A vehicle type.

    Attributes:
        id: Type name
        capacity: Shared capacity across commodities, in quantity units
        cost_per_km: Routing cost per unit distance
        compatible: Commodities the type may carry
    """
    id: str
    capacity: int
    cost_per_km: float
    compatible: frozenset[str]

    def comp(self, commodity: str) -> int:
        return 1 if commodity in self.compatible else 0


@dataclass(frozen=True)
class Instance:
    """
    An immutable problem instance.

    Safe to share read-only across concurrent solves.
    """
    depot: tuple[float, float]
    customers: tuple[Customer, ...]
    commodities: tuple[str, ...]
    vehicle_types: tuple[VehicleType, ...]
    dist: tuple[tuple[float, ...], ...]
    scale: int = 1
    name: str = "instance"
    fleet_spec: Optional[dict[str, Any]] = None

    def __post_init__(self):
        validate_instance(self)

    # -- locations -------------------------------------------------------

    @cached_property
    def _positions(self) -> dict[int, int]:
        positions = {DEPOT_ID: 0}
        for p, customer in enumerate(self.customers, start=1):
            positions[customer.id] = p
        return positions

    @cached_property
    def _customers_by_id(self) -> dict[int, Customer]:
        return {c.id: c for c in self.customers}

    @cached_property
    def dist_array(self) -> np.ndarray:
        """Distance matrix as a read-only numpy array (position-indexed)."""
        array = np.array(self.dist, dtype=float)
        array.setflags(write=False)
        return array

    @property
    def customer_ids(self) -> list[int]:
        return [c.id for c in self.customers]

    @property
    def location_ids(self) -> list[int]:
        """Depot first, then customers in index order."""
        return [DEPOT_ID] + self.customer_ids

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    def position(self, location_id: int) -> int:
        """Index of a location in the distance matrix and in the customer order."""
        try:
            return self._positions[location_id]
        except KeyError:
            raise InstanceValidationError(f"Unknown location id {location_id}") from None

    def customer(self, customer_id: int) -> Customer:
        try:
            return self._customers_by_id[customer_id]
        except KeyError:
            raise InstanceValidationError(f"Unknown customer id {customer_id}") from None

    def distance(self, a: int, b: int) -> float:
        """Distance between two location ids."""
        return self.dist[self.position(a)][self.position(b)]

    def coords(self, location_id: int) -> tuple[float, float]:
        if location_id == DEPOT_ID:
            return self.depot
        c = self.customer(location_id)
        return (c.x, c.y)

    # -- demand ----------------------------------------------------------

    def dem(self, customer_id: int, commodity: str) -> int:
        return self.customer(customer_id).dem(commodity)

    def total_demand(self, commodity: Optional[str] = None) -> int:
        """Total demand of one commodity, or of all commodities when None."""
        if commodity is None:
            return sum(c.total_demand for c in self.customers)
        return sum(c.dem(commodity) for c in self.customers)

    def vehicle_type(self, type_id: str) -> VehicleType:
        for vt in self.vehicle_types:
            if vt.id == type_id:
                return vt
        raise InstanceValidationError(f"Unknown vehicle type '{type_id}'")

    def quantity(self, units: int) -> Decimal:
        """Convert integer units to a decimal quantity at the instance scale."""
        return Decimal(units) / Decimal(self.scale)

    # -- derived instances ----------------------------------------------

    def with_customer_order(self, customer_ids: Sequence[int]) -> "Instance":
        """Return the same instance with customers (and distance rows) permuted."""
        if sorted(customer_ids) != sorted(self.customer_ids):
            raise InstanceValidationError("Customer order must be a permutation of the customer ids")
        order = [0] + [self.position(cid) for cid in customer_ids]
        dist = tuple(tuple(self.dist[a][b] for b in order) for a in order)
        return Instance(
            depot=self.depot,
            customers=tuple(self.customer(cid) for cid in customer_ids),
            commodities=self.commodities,
            vehicle_types=self.vehicle_types,
            dist=dist,
            scale=self.scale,
            name=self.name,
            fleet_spec=self.fleet_spec,
        )


def validate_instance(inst: Instance) -> None:
    """
    Check the instance invariants.

    Raises:
        InstanceValidationError: If any invariant fails
    """
    if not inst.commodities:
        raise InstanceValidationError("Instance must declare at least one commodity")
    if len(set(inst.commodities)) != len(inst.commodities):
        raise InstanceValidationError("Duplicate commodity names")
    if not inst.vehicle_types:
        raise InstanceValidationError("Instance must declare at least one vehicle type")
    if isinstance(inst.scale, bool) or not isinstance(inst.scale, int) or inst.scale <= 0:
        raise InstanceValidationError("Scale must be a positive integer")

    type_ids = [vt.id for vt in inst.vehicle_types]
    if len(set(type_ids)) != len(type_ids):
        raise InstanceValidationError("Duplicate vehicle type ids")
    for vt in inst.vehicle_types:
        if vt.capacity <= 0:
            raise InstanceValidationError(f"Vehicle type '{vt.id}' must have positive capacity")
        if vt.cost_per_km <= 0:
            raise InstanceValidationError(f"Vehicle type '{vt.id}' must have positive cost")
        if not vt.compatible:
            raise InstanceValidationError(f"Vehicle type '{vt.id}' is compatible with no commodity")
        unknown = vt.compatible - set(inst.commodities)
        if unknown:
            raise InstanceValidationError(
                f"Vehicle type '{vt.id}' lists unknown commodities {sorted(unknown)}"
            )

    seen: set[int] = set()
    for customer in inst.customers:
        if customer.id <= DEPOT_ID:
            raise InstanceValidationError(f"Customer id must be >= 1, got {customer.id}")
        if customer.id in seen:
            raise InstanceValidationError(f"Duplicate customer id {customer.id}")
        seen.add(customer.id)
        unknown = set(customer.demand) - set(inst.commodities)
        if unknown:
            raise InstanceValidationError(
                f"Customer {customer.id} demands unknown commodities {sorted(unknown)}"
            )
        for commodity, qty in customer.demand.items():
            if isinstance(qty, bool) or not isinstance(qty, int):
                raise InstanceValidationError(
                    f"Demand of customer {customer.id} for '{commodity}' must be an integer"
                )
            if qty < 0:
                raise InstanceValidationError(
                    f"Demand of customer {customer.id} for '{commodity}' is negative ({qty})"
                )
        if customer.total_demand <= 0:
            raise InstanceValidationError(f"Customer {customer.id} has zero total demand")

    for commodity in inst.commodities:
        if inst.total_demand(commodity) > 0 and not any(
            commodity in vt.compatible for vt in inst.vehicle_types
        ):
            raise InstanceValidationError(
                f"Commodity '{commodity}' has demand but no compatible vehicle type"
            )

    n = len(inst.customers) + 1
    if len(inst.dist) != n or any(len(row) != n for row in inst.dist):
        raise InstanceValidationError(f"Distance matrix must be {n}x{n}")
    for a in range(n):
        if inst.dist[a][a] != 0:
            raise InstanceValidationError("Distance matrix must have a zero diagonal")
        for b in range(a + 1, n):
            d = inst.dist[a][b]
            if d < 0 or not math.isfinite(d):
                raise InstanceValidationError("Distances must be finite and non-negative")
            if d != inst.dist[b][a]:
                raise InstanceValidationError("Distance matrix must be symmetric")


def euclidean_matrix(points: Sequence[tuple[float, float]]) -> tuple[tuple[float, ...], ...]:
    """Symmetric Euclidean distance matrix with an exact zero diagonal."""
    if not len(points):
        return ()
    matrix = squareform(pdist(np.asarray(points, dtype=float).reshape(-1, 2)))
    return tuple(tuple(float(d) for d in row) for row in matrix)


# ---------------------------------------------------------------------------
# Fleet
# ---------------------------------------------------------------------------


class FleetMode(str, Enum):
    STABLE = "stable"
    FLEXIBLE = "flexible"


@dataclass(frozen=True)
class Vehicle:
    """
    One vehicle of the fleet.

    In Flexible mode the type is a decision, so `type_id`, `capacity` and
    `cost_per_km` are None and `compatible` lists every commodity.
    """
    index: int
    type_id: Optional[str]
    capacity: Optional[int]
    cost_per_km: Optional[float]
    compatible: frozenset[str]


def _pool_order(types: Iterable[VehicleType]) -> list[VehicleType]:
    # Most versatile type (the refrigerated one) first, then by id
    return sorted(types, key=lambda vt: (-len(vt.compatible), vt.id))


@dataclass(frozen=True)
class Fleet:
    """
    The concrete vehicle list V.

    Attributes:
        mode: Stable (typed pools) or Flexible (types decided by the model)
        vehicles: Ordered vehicles; Stable pools are contiguous
        types: Vehicle types available to the fleet, in pool order
        pools: F_t per type id (Stable); empty in Flexible mode
    """
    mode: FleetMode
    vehicles: tuple[Vehicle, ...]
    types: tuple[VehicleType, ...]
    pools: dict[str, int] = field(default_factory=dict)

    @classmethod
    def stable(cls, types: Iterable[VehicleType], counts: Mapping[str, int]) -> "Fleet":
        """Build typed pools, refrigerated-first then by id."""
        ordered = _pool_order(types)
        known = {vt.id for vt in ordered}
        unknown = set(counts) - known
        if unknown:
            raise FleetSizingError(f"Pool counts for unknown vehicle types {sorted(unknown)}")
        vehicles: list[Vehicle] = []
        pools: dict[str, int] = {}
        for vt in ordered:
            count = int(counts.get(vt.id, 0))
            if count < 0:
                raise FleetSizingError(f"Pool size for '{vt.id}' must be non-negative")
            pools[vt.id] = count
            for _ in range(count):
                vehicles.append(Vehicle(
                    index=len(vehicles),
                    type_id=vt.id,
                    capacity=vt.capacity,
                    cost_per_km=vt.cost_per_km,
                    compatible=vt.compatible,
                ))
        return cls(mode=FleetMode.STABLE, vehicles=tuple(vehicles), types=tuple(ordered), pools=pools)

    @classmethod
    def flexible(cls, types: Iterable[VehicleType], count: int) -> "Fleet":
        """Build |V| untyped vehicles."""
        if count < 0:
            raise FleetSizingError("Fleet size must be non-negative")
        ordered = _pool_order(types)
        every = frozenset().union(*(vt.compatible for vt in ordered))
        vehicles = tuple(
            Vehicle(index=v, type_id=None, capacity=None, cost_per_km=None, compatible=every)
            for v in range(count)
        )
        return cls(mode=FleetMode.FLEXIBLE, vehicles=vehicles, types=tuple(ordered))

    @property
    def size(self) -> int:
        return len(self.vehicles)

    @property
    def cap_max(self) -> int:
        if self.mode is FleetMode.STABLE and self.vehicles:
            return max(v.capacity for v in self.vehicles)
        return max(vt.capacity for vt in self.types)

    @property
    def cap_min(self) -> int:
        if self.mode is FleetMode.STABLE and self.vehicles:
            return min(v.capacity for v in self.vehicles)
        return min(vt.capacity for vt in self.types)

    def type_of(self, type_id: str) -> VehicleType:
        for vt in self.types:
            if vt.id == type_id:
                return vt
        raise FleetSizingError(f"Unknown vehicle type '{type_id}'")

    def pool(self, type_id: str) -> list[Vehicle]:
        """Vehicles of one Stable pool, in order."""
        return [v for v in self.vehicles if v.type_id == type_id]

    def pool_firsts(self) -> list[Vehicle]:
        """First vehicle of every non-empty Stable pool."""
        firsts = []
        for vt in self.types:
            pool = self.pool(vt.id)
            if pool:
                firsts.append(pool[0])
        return firsts

    def total_capacity(self, commodity: Optional[str] = None) -> int:
        """Capacity that may carry a commodity (Stable), or |V|·cap_max bound (Flexible)."""
        if self.mode is FleetMode.FLEXIBLE:
            eligible = [vt.capacity for vt in self.types if commodity is None or commodity in vt.compatible]
            return self.size * max(eligible, default=0)
        return sum(
            v.capacity for v in self.vehicles if commodity is None or commodity in v.compatible
        )

    def to_document(self) -> dict[str, Any]:
        if self.mode is FleetMode.FLEXIBLE:
            return {"mode": self.mode.value, "counts": self.size}
        return {"mode": self.mode.value, "counts": dict(self.pools)}


def fleet_from_document(inst: Instance, block: Optional[Mapping[str, Any]] = None) -> Optional[Fleet]:
    """
    Build the fleet described by an instance document's optional `fleet` block.

    Returns:
        The Fleet, or None when the document has no fleet block
    """
    block = block if block is not None else inst.fleet_spec
    if not block:
        return None
    mode = block.get("mode")
    counts = block.get("counts")
    if mode == FleetMode.STABLE.value:
        if not isinstance(counts, Mapping):
            raise InstanceValidationError("Stable fleet counts must map type ids to pool sizes")
        return Fleet.stable(inst.vehicle_types, counts)
    if mode == FleetMode.FLEXIBLE.value:
        if isinstance(counts, bool) or not isinstance(counts, int):
            raise InstanceValidationError("Flexible fleet counts must be a vehicle count")
        return Fleet.flexible(inst.vehicle_types, counts)
    raise InstanceValidationError(f"Unknown fleet mode {mode!r}")


def commodity_roles(inst: Instance) -> dict[str, str]:
    """Assign every commodity to its cheapest compatible vehicle type (ties by id)."""
    roles = {}
    for commodity in inst.commodities:
        compatible = [vt for vt in inst.vehicle_types if commodity in vt.compatible]
        if not compatible:
            continue
        roles[commodity] = min(compatible, key=lambda vt: (vt.cost_per_km, vt.id)).id
    return roles


def size_stable_fleet(
    inst: Instance,
    roles: Optional[Mapping[str, str]] = None,
    slack: int = 1,
) -> Fleet:
    """
    Size typed pools from the demand each type is responsible for.

    F_t = ceil(demand of the commodities assigned to t / cap_t) + slack.

    Args:
        inst: Instance to size for
        roles: Commodity -> type id; defaults to the cheapest compatible type
        slack: Extra vehicles per type

    Returns:
        Stable-mode Fleet, refrigerated-first then by id

    Raises:
        FleetSizingError: If a commodity is assigned to an incompatible type
    """
    if slack < 0:
        raise FleetSizingError("Fleet slack must be non-negative")
    roles = dict(roles) if roles is not None else commodity_roles(inst)
    load: dict[str, int] = {vt.id: 0 for vt in inst.vehicle_types}
    for commodity in inst.commodities:
        demand = inst.total_demand(commodity)
        if commodity not in roles:
            if demand > 0:
                raise FleetSizingError(f"Commodity '{commodity}' has no sizing role")
            continue
        type_id = roles[commodity]
        vt = inst.vehicle_type(type_id)
        if commodity not in vt.compatible:
            raise FleetSizingError(
                f"Commodity '{commodity}' assigned to incompatible type '{type_id}'"
            )
        load[type_id] += demand
    counts = {
        vt.id: -(-load[vt.id] // vt.capacity) + slack
        for vt in inst.vehicle_types
    }
    logger.debug(f"[CTX:PBI-1:1-1:INSTANCE] Stable pools for {inst.name}: {counts}")
    return Fleet.stable(inst.vehicle_types, counts)


def size_flexible_fleet(inst: Instance) -> int:
    """|V| = ceil(total demand / smallest capacity)."""
    cap_min = min(vt.capacity for vt in inst.vehicle_types)
    return -(-inst.total_demand() // cap_min)


# ---------------------------------------------------------------------------
# Documents
# ---------------------------------------------------------------------------


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise InstanceValidationError(message)


def _number(value: Any, what: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        f"{what} must be a number",
    )
    return float(value)


def _integer(value: Any, what: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), f"{what} must be an integer")
    return value


def load_instance(document: str | Mapping[str, Any]) -> Instance:
    """
    Parse and validate an instance document.

    Args:
        document: JSON text or an already-parsed mapping

    Returns:
        Validated Instance; distances are Euclidean when the document has no matrix

    Raises:
        InstanceValidationError: On schema violations or broken invariants
    """
    if isinstance(document, str):
        try:
            data = json.loads(document)
        except json.JSONDecodeError as e:
            raise InstanceValidationError(f"Invalid JSON instance document: {e}") from e
    else:
        data = document
    _require(isinstance(data, Mapping), "Instance document must be an object")
    for key in ("depot", "customers", "commodities", "vehicle_types"):
        _require(key in data, f"Instance document is missing '{key}'")

    depot = data["depot"]
    _require(isinstance(depot, Mapping), "'depot' must be an object with x and y")
    depot_xy = (_number(depot.get("x"), "depot.x"), _number(depot.get("y"), "depot.y"))

    commodities = data["commodities"]
    _require(
        isinstance(commodities, list) and all(isinstance(k, str) for k in commodities),
        "'commodities' must be a list of names",
    )

    vehicle_types = []
    _require(isinstance(data["vehicle_types"], list), "'vehicle_types' must be a list")
    for i, raw in enumerate(data["vehicle_types"]):
        _require(isinstance(raw, Mapping), f"vehicle_types[{i}] must be an object")
        _require(isinstance(raw.get("id"), str), f"vehicle_types[{i}].id must be a string")
        compatible = raw.get("compatible")
        _require(
            isinstance(compatible, list) and all(isinstance(k, str) for k in compatible),
            f"vehicle_types[{i}].compatible must be a list of commodity names",
        )
        vehicle_types.append(VehicleType(
            id=raw["id"],
            capacity=_integer(raw.get("capacity"), f"vehicle_types[{i}].capacity"),
            cost_per_km=_number(raw.get("cost_per_km"), f"vehicle_types[{i}].cost_per_km"),
            compatible=frozenset(compatible),
        ))

    customers = []
    _require(isinstance(data["customers"], list), "'customers' must be a list")
    for i, raw in enumerate(data["customers"]):
        _require(isinstance(raw, Mapping), f"customers[{i}] must be an object")
        demand_raw = raw.get("demand")
        _require(isinstance(demand_raw, Mapping), f"customers[{i}].demand must be an object")
        demand = {k: 0 for k in commodities}
        for commodity, qty in demand_raw.items():
            demand[commodity] = _integer(qty, f"customers[{i}].demand.{commodity}")
        customers.append(Customer(
            id=_integer(raw.get("id"), f"customers[{i}].id"),
            x=_number(raw.get("x"), f"customers[{i}].x"),
            y=_number(raw.get("y"), f"customers[{i}].y"),
            demand=demand,
        ))

    if data.get("dist") is not None:
        raw_dist = data["dist"]
        _require(
            isinstance(raw_dist, list) and all(isinstance(row, list) for row in raw_dist),
            "'dist' must be a matrix",
        )
        dist = tuple(tuple(_number(d, "dist entry") for d in row) for row in raw_dist)
    else:
        dist = euclidean_matrix([depot_xy] + [(c.x, c.y) for c in customers])

    fleet_spec = data.get("fleet")
    if fleet_spec is not None:
        _require(isinstance(fleet_spec, Mapping), "'fleet' must be an object")
        fleet_spec = dict(fleet_spec)

    inst = Instance(
        depot=depot_xy,
        customers=tuple(customers),
        commodities=tuple(commodities),
        vehicle_types=tuple(vehicle_types),
        dist=dist,
        scale=_integer(data.get("scale", 1), "scale"),
        name=str(data.get("name", "instance")),
        fleet_spec=fleet_spec,
    )
    if fleet_spec is not None:
        fleet_from_document(inst)
    return inst


def instance_to_document(inst: Instance) -> dict[str, Any]:
    """Structured (JSON-compatible) form of an instance."""
    document: dict[str, Any] = {
        "name": inst.name,
        "scale": inst.scale,
        "depot": {"x": inst.depot[0], "y": inst.depot[1]},
        "commodities": list(inst.commodities),
        "vehicle_types": [
            {
                "id": vt.id,
                "capacity": vt.capacity,
                "cost_per_km": vt.cost_per_km,
                "compatible": [k for k in inst.commodities if k in vt.compatible],
            }
            for vt in inst.vehicle_types
        ],
        "customers": [
            {
                "id": c.id,
                "x": c.x,
                "y": c.y,
                "demand": {k: c.dem(k) for k in inst.commodities},
            }
            for c in inst.customers
        ],
        "dist": [list(row) for row in inst.dist],
    }
    if inst.fleet_spec is not None:
        document["fleet"] = dict(inst.fleet_spec)
    return document


def save_instance(inst: Instance) -> str:
    """Serialize an instance to JSON text (inverse of `load_instance`)."""
    return json.dumps(instance_to_document(inst), indent=2)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def aggregate_customers(inst: Instance, radius: float) -> Instance:
    """
    Merge nearby customers into clusters.

    Seeds are picked farthest-first (starting from the depot); each cluster
    takes every unassigned customer within `radius` of its seed. A cluster
    keeps its seed's id, sums demands per commodity, and sits at the
    demand-weighted centroid of its members.

    Args:
        inst: Instance to aggregate
        radius: Clustering radius (km), >= 0; 0 returns the instance unchanged

    Returns:
        Aggregated instance; per-commodity totals are preserved exactly
    """
    if radius < 0:
        raise InstanceValidationError("Clustering radius must be non-negative")
    if radius == 0 or inst.n_customers <= 1:
        return inst

    dist = inst.dist_array
    unassigned = list(range(1, inst.n_customers + 1))
    seeds: list[int] = []
    clusters: list[list[int]] = []
    while unassigned:
        anchors = [0] + seeds
        # Farthest from the depot and from every previous seed; ties by position
        seed = max(unassigned, key=lambda p: (min(dist[p, a] for a in anchors), -p))
        members = [p for p in unassigned if dist[seed, p] <= radius]
        seeds.append(seed)
        clusters.append(members)
        unassigned = [p for p in unassigned if p not in members]

    if all(len(members) == 1 for members in clusters):
        return inst

    merged = []
    for seed, members in sorted(zip(seeds, clusters), key=lambda pair: pair[0]):
        customers = [inst.customers[p - 1] for p in members]
        if len(customers) == 1:
            merged.append(customers[0])
            continue
        demand = {k: sum(c.dem(k) for c in customers) for k in inst.commodities}
        weight = sum(c.total_demand for c in customers)
        x = sum(c.x * c.total_demand for c in customers) / weight
        y = sum(c.y * c.total_demand for c in customers) / weight
        merged.append(Customer(id=inst.customers[seed - 1].id, x=x, y=y, demand=demand))

    logger.info(
        f"[CTX:PBI-1:1-1:INSTANCE] Aggregated {inst.n_customers} customers "
        f"into {len(merged)} clusters (radius={radius})"
    )
    return Instance(
        depot=inst.depot,
        customers=tuple(merged),
        commodities=inst.commodities,
        vehicle_types=inst.vehicle_types,
        dist=euclidean_matrix([inst.depot] + [(c.x, c.y) for c in merged]),
        scale=inst.scale,
        name=inst.name,
        fleet_spec=inst.fleet_spec,
    )


def radius_for_cluster_count(inst: Instance, target: int, iterations: int = 40) -> float:
    """
    Bisect the clustering radius so aggregation yields about `target` customers.

    Returns:
        The smallest radius found whose cluster count is <= target
    """
    if target >= inst.n_customers:
        return 0.0
    low, high = 0.0, float(inst.dist_array.max()) * 2 + 1.0
    for _ in range(iterations):
        mid = (low + high) / 2
        if aggregate_customers(inst, mid).n_customers > target:
            low = mid
        else:
            high = mid
    return high


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


# Demand profile per generator profile: (max units per commodity, share of
# customers drawn above cap_max, force at least one such customer)
_DEMAND_PROFILES = {
    "standard": (6, 0.2, False),
    "split-heavy": (6, 0.5, True),
    "single-type": (4, 0.0, False),
    "oracle": (2, 0.0, False),
}

# Vehicles the brute-force oracle enumerates; oracle-profile instances carry a
# Stable fleet block of this size while the zero-slack sizing fits in it
ORACLE_MAX_VEHICLES = 3


def _commodity_names(n_commodities: int) -> tuple[str, ...]:
    if n_commodities == 1:
        return ("general",)
    names = ["chilled", "ambient"] + [f"dry{k}" for k in range(2, n_commodities)]
    return tuple(names[:n_commodities])


def _oracle_fleet_spec(inst: Instance) -> dict[str, Any]:
    """Zero-slack Stable pools, topped up with spares of the most versatile type."""
    counts = dict(size_stable_fleet(inst, slack=0).pools)
    versatile = _pool_order(inst.vehicle_types)[0].id
    while sum(counts.values()) < ORACLE_MAX_VEHICLES:
        counts[versatile] += 1
    if sum(counts.values()) > ORACLE_MAX_VEHICLES:
        logger.debug(f"[CTX:PBI-1:1-1:INSTANCE] {inst.name}: demand needs {counts}, above the oracle limit")
    return {"mode": FleetMode.STABLE.value, "counts": counts}


def _profile_types(profile: str, commodities: tuple[str, ...]) -> tuple[VehicleType, ...]:
    every = frozenset(commodities)
    if profile == "single-type":
        return (VehicleType("truck", 10, 1.0, every),)
    capacities = {"standard": (10, 14), "split-heavy": (10, 14), "oracle": (10, 12)}[profile]
    types = [VehicleType("refrigerated", capacities[0], 1.5, every)]
    regular = every - {"chilled"}
    if regular and regular != every:
        types.append(VehicleType("regular", capacities[1], 1.0, frozenset(regular)))
    return tuple(types)


def generate_instance(
    seed: int,
    n_customers: int,
    n_commodities: int = 2,
    type_profiles: str | Sequence[VehicleType] = "standard",
    square_km: float = 100.0,
    scale: int = 1,
    demand_profile: Optional[str] = None,
    name: Optional[str] = None,
) -> Instance:
    """
    Generate a seeded random instance.

    Coordinates are uniform in a square with the depot at its centre. Some
    customers are drawn above the largest capacity so split deliveries are
    needed.

    Args:
        seed: RNG seed; equal seeds give identical instances
        n_customers: Number of customers, >= 1
        n_commodities: Number of commodities, >= 1
        type_profiles: Named profile ("standard", "split-heavy", "single-type",
                       "oracle") or an explicit list of vehicle types
        square_km: Side of the square
        scale: Quantity scale recorded on the instance
        demand_profile: Demand profile name; defaults to the type profile name
                        (or "standard" for explicit types)
        name: Instance name

    Raises:
        InstanceValidationError: If n_customers < 1 or the profile is unknown
    """
    if n_customers < 1:
        raise InstanceValidationError("Generated instances need at least one customer")
    if n_commodities < 1:
        raise InstanceValidationError("Generated instances need at least one commodity")

    commodities = _commodity_names(n_commodities)
    if isinstance(type_profiles, str):
        if type_profiles not in _DEMAND_PROFILES:
            raise InstanceValidationError(f"Unknown generator profile '{type_profiles}'")
        types = _profile_types(type_profiles, commodities)
        demand_profile = demand_profile or type_profiles
    else:
        types = tuple(type_profiles)
        demand_profile = demand_profile or "standard"
    if demand_profile not in _DEMAND_PROFILES:
        raise InstanceValidationError(f"Unknown demand profile '{demand_profile}'")
    per_commodity_max, large_share, force_large = _DEMAND_PROFILES[demand_profile]
    cap_max = max(vt.capacity for vt in types)

    rng = np.random.default_rng(seed)
    depot = (square_km / 2, square_km / 2)
    coords = rng.uniform(0.0, square_km, size=(n_customers, 2))
    large = rng.random(n_customers) < large_share
    if force_large and not large.any():
        large[int(rng.integers(n_customers))] = True

    customers = []
    for i in range(n_customers):
        if large[i]:
            total = int(rng.integers(cap_max + 1, 2 * cap_max + 1))
            split = rng.multinomial(total, [1.0 / n_commodities] * n_commodities)
            demand = {k: int(q) for k, q in zip(commodities, split)}
        else:
            draws = rng.integers(0, per_commodity_max + 1, size=n_commodities)
            demand = {k: int(q) for k, q in zip(commodities, draws)}
            if sum(demand.values()) == 0:
                demand[commodities[int(rng.integers(n_commodities))]] = 1
        customers.append(Customer(
            id=i + 1,
            x=float(coords[i, 0]),
            y=float(coords[i, 1]),
            demand=demand,
        ))

    inst = Instance(
        depot=depot,
        customers=tuple(customers),
        commodities=commodities,
        vehicle_types=types,
        dist=euclidean_matrix([depot] + [(c.x, c.y) for c in customers]),
        scale=scale,
        name=name or f"gen-{seed}-{n_customers}",
    )
    if type_profiles == "oracle":
        inst = replace(inst, fleet_spec=_oracle_fleet_spec(inst))
    return inst
