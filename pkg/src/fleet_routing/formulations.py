"""
Builders for the four routing models SC, SV, FC and FF.
[CTX:PBI-2:2-2:FORMULATIONS]

The first letter of a kind is the fleet model (Stable pools or Flexible
types), the second the routing model (Commodity flow or Vehicle flow; the
Flexible vehicle-flow kind keeps its historical name "ff").

Symbols and their subscripts (location ids, commodity names, type ids):
    x[v,i,j] / x[v,t,i,j]   binary arc use (Stable / Flexible)
    y[v,i,k]                delivered quantity
    u[v]                    binary "vehicle unused"
    z[v,t]                  binary type choice (Flexible)
    f[v,k,i,j]              load of commodity k on an arc (Commodity flow)
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator, Mapping, Optional

import networkx as nx

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.delivery import assign_deliveries
from fleet_routing.instance import (
    DEPOT_ID,
    Fleet,
    FleetMode,
    Instance,
    fleet_from_document,
    size_flexible_fleet,
    size_stable_fleet,
)
from fleet_routing.mip.model import Assignment, LazyCut, Model, ModelBuildError, Sense, VarKind
from fleet_routing.solver.separation import separate_subtours, subtour_cuts
from fleet_routing.warmstart.solution import RoutingSolution

if TYPE_CHECKING:
    from fleet_routing.strengthen import StrengthenConfig, StrengthenContext

logger = logging.getLogger(__name__)

DEFAULT_PRIORITIES = {"usage": 100, "type": 50, "arc": 0}


class DecodeError(FleetRoutingError):
    """Raised when an assignment does not describe valid routes."""
    pass


class RoutingKind(str, Enum):
    COMMODITY = "commodity"
    VEHICLE = "vehicle"


MODEL_KINDS: dict[str, tuple[FleetMode, RoutingKind]] = {
    "sc": (FleetMode.STABLE, RoutingKind.COMMODITY),
    "sv": (FleetMode.STABLE, RoutingKind.VEHICLE),
    "fc": (FleetMode.FLEXIBLE, RoutingKind.COMMODITY),
    "ff": (FleetMode.FLEXIBLE, RoutingKind.VEHICLE),
}

# Alternative spellings of the vehicle-flow kinds
KIND_ALIASES = {"sf": "sv", "fv": "ff"}


def parse_kind(kind: str) -> tuple[FleetMode, RoutingKind]:
    """Map "sc" | "sv" | "fc" | "ff" (case-insensitive) to its fleet and routing kinds."""
    code = KIND_ALIASES.get(kind.lower(), kind.lower())
    if code not in MODEL_KINDS:
        raise ModelBuildError(f"Unknown model kind '{kind}', expected one of {sorted(MODEL_KINDS)}")
    return MODEL_KINDS[code]


def kind_code(fleet_kind: FleetMode, routing_kind: RoutingKind) -> str:
    for code, pair in MODEL_KINDS.items():
        if pair == (FleetMode(fleet_kind), RoutingKind(routing_kind)):
            return code
    raise ModelBuildError(f"Invalid kind pair ({fleet_kind}, {routing_kind})")


def arcs(inst: Instance) -> list[tuple[int, int]]:
    """The complete directed arc set E on depot + customers, without self-loops."""
    ids = inst.location_ids
    return [(i, j) for i in ids for j in ids if i != j]


def _subscripts(key: tuple) -> str:
    return ",".join(str(part) for part in key)


@dataclass
class VariableCatalog:
    """
    Bidirectional index between model symbols and variable ids.

    Keys use location ids, commodity names and type ids. Stable x keys are
    (v, i, j); Flexible x keys are (v, t, i, j).
    """
    mode: FleetMode
    x: dict[tuple, int] = field(default_factory=dict)
    y: dict[tuple[int, int, str], int] = field(default_factory=dict)
    u: dict[int, int] = field(default_factory=dict)
    z: dict[tuple[int, str], int] = field(default_factory=dict)
    f: dict[tuple[int, str, int, int], int] = field(default_factory=dict)
    _symbols: dict[int, tuple[str, tuple]] = field(default_factory=dict)
    _arcs_by_vehicle: dict[int, list[tuple[Optional[str], int, int, int]]] = field(default_factory=dict)

    def add(self, symbol: str, key: Any, var_id: int) -> None:
        family = getattr(self, symbol)
        if key in family:
            raise ModelBuildError(f"Duplicate catalogue entry {symbol}[{key}]")
        family[key] = var_id
        self._symbols[var_id] = (symbol, key if isinstance(key, tuple) else (key,))
        if symbol == "x":
            if self.mode is FleetMode.FLEXIBLE:
                v, t, i, j = key
            else:
                (v, i, j), t = key, None
            self._arcs_by_vehicle.setdefault(v, []).append((t, i, j, var_id))

    def lookup(self, symbol: str, *key) -> int:
        family = getattr(self, symbol)
        index = key[0] if len(key) == 1 and symbol == "u" else tuple(key)
        try:
            return family[index]
        except KeyError:
            raise KeyError(f"No variable {symbol}[{_subscripts(tuple(key))}]") from None

    def symbol_of(self, var_id: int) -> tuple[str, tuple]:
        return self._symbols[var_id]

    def arc_vars(self, v: int) -> list[tuple[Optional[str], int, int, int]]:
        """(type or None, i, j, var id) of every arc variable of vehicle v."""
        return self._arcs_by_vehicle.get(v, [])

    def x_var(self, v: int, i: int, j: int, t: Optional[str] = None) -> int:
        if self.mode is FleetMode.FLEXIBLE:
            return self.x[(v, t, i, j)]
        return self.x[(v, i, j)]

    def arcs_into(self, v: int, i: int) -> list[int]:
        return [var for _, a, b, var in self.arc_vars(v) if b == i]

    def arcs_out_of(self, v: int, i: int) -> list[int]:
        return [var for _, a, b, var in self.arc_vars(v) if a == i]

    def counts(self) -> dict[str, int]:
        return {symbol: len(getattr(self, symbol)) for symbol in ("x", "y", "u", "z", "f")}


@dataclass
class BuildOptions:
    """
    Options of `build_model`.

    Attributes:
        strengthen: Cut and symmetry families to add (None for the plain model)
        priorities: Branching priority per class (usage, type, arc)
        fleet_slack: Extra vehicles per Stable pool when the fleet is sized here
    """
    strengthen: Optional["StrengthenConfig"] = None
    priorities: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_PRIORITIES))
    fleet_slack: int = 1


@dataclass
class BuiltModel:
    """A model with its symbol catalogue, kind and fleet."""
    model: Model
    catalog: VariableCatalog
    fleet_kind: FleetMode
    routing_kind: RoutingKind
    fleet: Fleet
    instance: Instance
    config: Optional["StrengthenConfig"] = None
    context: Optional["StrengthenContext"] = None
    families_added: dict[str, int] = field(default_factory=dict)

    @property
    def kind(self) -> tuple[FleetMode, RoutingKind]:
        return (self.fleet_kind, self.routing_kind)

    @property
    def code(self) -> str:
        return kind_code(self.fleet_kind, self.routing_kind)

    @property
    def is_vehicle_flow(self) -> bool:
        return self.routing_kind is RoutingKind.VEHICLE

    def vehicle_capacity(self, v: int) -> int:
        """cap_v in Stable mode, the largest type capacity in Flexible mode."""
        if self.fleet_kind is FleetMode.STABLE:
            return self.fleet.vehicles[v].capacity
        return self.fleet.cap_max

    def to_lp_text(self) -> str:
        return self.model.to_lp_text()


# ---------------------------------------------------------------------------
# Variable creation
# ---------------------------------------------------------------------------


def resolve_fleet(
    inst: Instance,
    fleet_kind: FleetMode,
    fleet: Optional[Fleet] = None,
    slack: int = 1,
) -> Fleet:
    """
    The fleet a model is built over: the given one, else the instance's own
    fleet block when its mode matches, else a freshly sized one.
    """
    if fleet is not None:
        if fleet.mode is not fleet_kind:
            raise ModelBuildError(f"Fleet mode {fleet.mode.value} does not match model kind {fleet_kind.value}")
        return fleet
    documented = fleet_from_document(inst)
    if documented is not None and documented.mode is fleet_kind:
        return documented
    if fleet_kind is FleetMode.STABLE:
        return size_stable_fleet(inst, slack=slack)
    return Fleet.flexible(inst.vehicle_types, size_flexible_fleet(inst))


def check_capacity(inst: Instance, fleet: Fleet) -> None:
    """
    Reject fleets that cannot carry the demand.

    Raises:
        ModelBuildError: If some commodity (or the total) exceeds the capacity able to carry it
    """
    if fleet.total_capacity() < inst.total_demand():
        raise ModelBuildError(
            f"Infeasible by construction: fleet capacity {fleet.total_capacity()} "
            f"< total demand {inst.total_demand()}"
        )
    for commodity in inst.commodities:
        demand = inst.total_demand(commodity)
        if demand > 0 and fleet.total_capacity(commodity) < demand:
            raise ModelBuildError(
                f"Infeasible by construction: capacity able to carry '{commodity}' "
                f"({fleet.total_capacity(commodity)}) < its demand ({demand})"
            )


def create_variables(
    inst: Instance,
    fleet: Fleet,
    routing_kind: RoutingKind,
    catalog: VariableCatalog,
    model: Model,
    priorities: Optional[Mapping[str, int]] = None,
) -> None:
    """Declare x, y, u, z and f for the given kinds."""
    priorities = {**DEFAULT_PRIORITIES, **(priorities or {})}
    flexible = fleet.mode is FleetMode.FLEXIBLE
    edge_set = arcs(inst)

    for vehicle in fleet.vehicles:
        v = vehicle.index
        if flexible:
            for vt in fleet.types:
                for i, j in edge_set:
                    catalog.add("x", (v, vt.id, i, j), model.add_variable(
                        VarKind.BINARY,
                        obj=vt.cost_per_km * inst.distance(i, j),
                        priority=priorities["arc"],
                        name=f"x[{v},{vt.id},{i},{j}]",
                    ))
        else:
            for i, j in edge_set:
                catalog.add("x", (v, i, j), model.add_variable(
                    VarKind.BINARY,
                    obj=vehicle.cost_per_km * inst.distance(i, j),
                    priority=priorities["arc"],
                    name=f"x[{v},{i},{j}]",
                ))

    for vehicle in fleet.vehicles:
        v = vehicle.index
        y_upper = fleet.cap_max if flexible else vehicle.capacity
        for customer in inst.customers:
            for commodity in inst.commodities:
                if commodity not in vehicle.compatible:
                    continue
                catalog.add("y", (v, customer.id, commodity), model.add_variable(
                    VarKind.CONTINUOUS,
                    lower=0.0,
                    upper=y_upper,
                    name=f"y[{v},{customer.id},{commodity}]",
                ))

    for vehicle in fleet.vehicles:
        catalog.add("u", vehicle.index, model.add_variable(
            VarKind.BINARY, priority=priorities["usage"], name=f"u[{vehicle.index}]"
        ))

    if flexible:
        for vehicle in fleet.vehicles:
            for vt in fleet.types:
                catalog.add("z", (vehicle.index, vt.id), model.add_variable(
                    VarKind.BINARY, priority=priorities["type"], name=f"z[{vehicle.index},{vt.id}]"
                ))

    if routing_kind is RoutingKind.COMMODITY:
        for vehicle in fleet.vehicles:
            v = vehicle.index
            f_upper = fleet.cap_max if flexible else vehicle.capacity
            for commodity in inst.commodities:
                if commodity not in vehicle.compatible:
                    continue
                for i, j in edge_set:
                    catalog.add("f", (v, commodity, i, j), model.add_variable(
                        VarKind.CONTINUOUS,
                        lower=0.0,
                        upper=f_upper,
                        name=f"f[{v},{commodity},{i},{j}]",
                    ))


# ---------------------------------------------------------------------------
# Constraint families
# ---------------------------------------------------------------------------


def build_core(inst: Instance, fleet: Fleet, catalog: VariableCatalog, model: Model) -> None:
    """Demand satisfaction, Stable capacity, usage and visited links."""
    flexible = fleet.mode is FleetMode.FLEXIBLE

    for customer in inst.customers:
        for commodity in inst.commodities:
            row = {
                catalog.y[(v.index, customer.id, commodity)]: 1.0
                for v in fleet.vehicles
                if (v.index, customer.id, commodity) in catalog.y
            }
            demand = customer.dem(commodity)
            if not row:
                if demand > 0:
                    raise ModelBuildError(
                        f"No vehicle can deliver '{commodity}' to customer {customer.id}"
                    )
                continue
            model.add_linear_constraint(
                row, Sense.EQ, demand, tag=f"demand[i={customer.id},k={commodity}]"
            )

    if not flexible:
        for vehicle in fleet.vehicles:
            row = {
                var: 1.0 for (v, _, _), var in catalog.y.items() if v == vehicle.index
            }
            model.add_linear_constraint(
                row, Sense.LE, vehicle.capacity, tag=f"capacity[v={vehicle.index}]"
            )

    # Usage link in the form Σ_E x[v] <= |E|·(1 − u_v); u = 1 means unused
    for vehicle in fleet.vehicles:
        v = vehicle.index
        arc_vars = catalog.arc_vars(v)
        n_edges = len(arcs(inst))
        row = {var: 1.0 for _, _, _, var in arc_vars}
        row[catalog.u[v]] = float(n_edges)
        model.add_linear_constraint(row, Sense.LE, n_edges, tag=f"usage[v={v}]")

    for (v, i, commodity), y_var in catalog.y.items():
        row = {y_var: 1.0}
        demand = inst.dem(i, commodity)
        for var in catalog.arcs_into(v, i):
            if demand:
                row[var] = -float(demand)
        model.add_linear_constraint(
            row, Sense.LE, 0.0, tag=f"visited[v={v},i={i},k={commodity}]"
        )


def build_fleet(inst: Instance, fleet: Fleet, catalog: VariableCatalog, model: Model) -> Fleet:
    """
    Fleet-model rows.

    Stable pools need none (compatibility is implicit in which y exist and y
    is bounded by cap_v). Flexible vehicles get a type choice, per-commodity
    and total capacity through z, and arcs restricted to the chosen type layer.
    """
    if fleet.mode is FleetMode.STABLE:
        return fleet

    n_edges = len(arcs(inst))
    for vehicle in fleet.vehicles:
        v = vehicle.index
        model.add_linear_constraint(
            {catalog.z[(v, vt.id)]: 1.0 for vt in fleet.types},
            Sense.EQ,
            1.0,
            tag=f"type_choice[v={v}]",
        )
        for commodity in inst.commodities:
            row = {
                var: 1.0 for (w, _, k), var in catalog.y.items() if w == v and k == commodity
            }
            for vt in fleet.types:
                row[catalog.z[(v, vt.id)]] = -float(vt.capacity * vt.comp(commodity))
            model.add_linear_constraint(row, Sense.LE, 0.0, tag=f"compatibility[v={v},k={commodity}]")
        row = {var: 1.0 for (w, _, _), var in catalog.y.items() if w == v}
        for vt in fleet.types:
            row[catalog.z[(v, vt.id)]] = -float(vt.capacity)
        model.add_linear_constraint(row, Sense.LE, 0.0, tag=f"capacity[v={v}]")
        for vt in fleet.types:
            row = {var: 1.0 for t, _, _, var in catalog.arc_vars(v) if t == vt.id}
            row[catalog.z[(v, vt.id)]] = -float(n_edges)
            model.add_linear_constraint(row, Sense.LE, 0.0, tag=f"type_edges[v={v},t={vt.id}]")
    return fleet


def _balance_rows(inst: Instance, fleet: Fleet, catalog: VariableCatalog, model: Model) -> None:
    layers: list[Optional[str]] = (
        [vt.id for vt in fleet.types] if fleet.mode is FleetMode.FLEXIBLE else [None]
    )
    for vehicle in fleet.vehicles:
        v = vehicle.index
        for t in layers:
            for i in inst.location_ids:
                row: dict[int, float] = {}
                for layer, a, b, var in catalog.arc_vars(v):
                    if layer != t:
                        continue
                    if a == i:
                        row[var] = 1.0
                    elif b == i:
                        row[var] = -1.0
                tag = f"balance[v={v},i={i}]" if t is None else f"balance[v={v},t={t},i={i}]"
                model.add_linear_constraint(row, Sense.EQ, 0.0, tag=tag)


def build_routing(
    inst: Instance,
    fleet: Fleet,
    routing_kind: RoutingKind,
    catalog: VariableCatalog,
    model: Model,
) -> None:
    """
    Routing-model rows.

    Both kinds keep vehicle degree balance so every route closes at the
    depot. Vehicle flow registers the lazy sub-tour hook; commodity flow adds
    load balance at customers and carry capacity on arcs.
    """
    _balance_rows(inst, fleet, catalog, model)

    if routing_kind is RoutingKind.VEHICLE:
        def separate(values: Mapping[int, float]) -> list[LazyCut]:
            cuts: list[LazyCut] = []
            for subtour in separate_subtours(catalog, values):
                cuts.extend(subtour_cuts(catalog, subtour, [vt.id for vt in fleet.types]))
            return cuts

        model.register_lazy_hook(separate)
        return

    flexible = fleet.mode is FleetMode.FLEXIBLE
    ids = inst.location_ids
    for vehicle in fleet.vehicles:
        v = vehicle.index
        for commodity in inst.commodities:
            if commodity not in vehicle.compatible:
                continue
            for customer in inst.customers:
                i = customer.id
                row = {}
                for j in ids:
                    if j == i:
                        continue
                    row[catalog.f[(v, commodity, j, i)]] = 1.0
                    row[catalog.f[(v, commodity, i, j)]] = -1.0
                row[catalog.y[(v, i, commodity)]] = -1.0
                model.add_linear_constraint(
                    row, Sense.EQ, 0.0, tag=f"flow_balance[v={v},i={i},k={commodity}]"
                )
        for i, j in arcs(inst):
            row = {
                catalog.f[(v, k, i, j)]: 1.0 for k in inst.commodities if (v, k, i, j) in catalog.f
            }
            if flexible:
                for vt in fleet.types:
                    row[catalog.x[(v, vt.id, i, j)]] = -float(vt.capacity)
            else:
                row[catalog.x[(v, i, j)]] = -float(vehicle.capacity)
            model.add_linear_constraint(row, Sense.LE, 0.0, tag=f"carry[v={v},i={i},j={j}]")


def build_model(
    inst: Instance,
    fleet_kind: FleetMode | str,
    routing_kind: RoutingKind | str,
    options: Optional[BuildOptions] = None,
    fleet: Optional[Fleet] = None,
) -> BuiltModel:
    """
    Build, strengthen and freeze a complete model.

    Args:
        inst: Instance (customers are reordered farthest-first when the
              strengthening config asks for it)
        fleet_kind: Stable or Flexible
        routing_kind: Commodity or Vehicle
        options: Strengthening families, priorities and sizing slack
        fleet: Explicit fleet; sized from the instance when omitted

    Returns:
        Frozen BuiltModel

    Raises:
        ModelBuildError: If the fleet cannot carry the demand
        StrengthenConfigError: If a family does not apply to the kind
    """
    from fleet_routing.strengthen import apply_symmetry, apply_valid_cuts, reorder_customers_farthest_first

    fleet_kind = FleetMode(fleet_kind)
    routing_kind = RoutingKind(routing_kind)
    options = options or BuildOptions()
    config = options.strengthen
    if config is not None:
        config.validate(fleet_kind, routing_kind)
        if config.reorders:
            inst = reorder_customers_farthest_first(inst)

    fleet = resolve_fleet(inst, fleet_kind, fleet, options.fleet_slack)
    check_capacity(inst, fleet)

    code = kind_code(fleet_kind, routing_kind)
    model = Model(f"{inst.name}:{code}")
    catalog = VariableCatalog(fleet_kind)
    create_variables(inst, fleet, routing_kind, catalog, model, options.priorities)
    build_core(inst, fleet, catalog, model)
    build_fleet(inst, fleet, catalog, model)
    build_routing(inst, fleet, routing_kind, catalog, model)
    logger.info(
        f"[CTX:PBI-2:2-2:FORMULATIONS] {model.name}: usage link applied as "
        f"sum(x[v]) <= |E|*(1 - u[v]) (u = 1 means unused)"
    )

    built = BuiltModel(
        model=model,
        catalog=catalog,
        fleet_kind=fleet_kind,
        routing_kind=routing_kind,
        fleet=fleet,
        instance=inst,
        config=config,
    )
    if config is not None:
        apply_valid_cuts(built, config)
        apply_symmetry(built, config)
    model.freeze()
    logger.debug(
        f"[CTX:PBI-2:2-2:FORMULATIONS] {model.name}: {model.num_variables} variables, "
        f"{model.num_constraints} rows, families {dict(model.tag_counts())}"
    )
    return built


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------


def _vehicle_layers(built: BuiltModel, v: int, values: Mapping[int, float]) -> dict[Optional[str], list[tuple[int, int]]]:
    layers: dict[Optional[str], list[tuple[int, int]]] = {}
    for t, i, j, var in built.catalog.arc_vars(v):
        if values.get(var, 0.0) > 0.5:
            layers.setdefault(t, []).append((i, j))
    return layers


def _route_from_arcs(
    built: BuiltModel,
    v: int,
    used: list[tuple[int, int]],
    values: Mapping[int, float],
) -> list[int]:
    graph = nx.DiGraph(used)
    route: list[int] = []
    for component in nx.weakly_connected_components(graph):
        if DEPOT_ID not in component:
            delivered = sum(
                values.get(var, 0.0)
                for (w, i, _), var in built.catalog.y.items()
                if w == v and i in component
            )
            if built.routing_kind is RoutingKind.COMMODITY and delivered <= 1e-6:
                continue
            raise DecodeError(f"Vehicle {v} has a depot-free cycle over {sorted(component)}")
        sub = graph.subgraph(component)
        if not nx.is_eulerian(sub):
            raise DecodeError(f"Arcs of vehicle {v} do not form closed routes")
        for a, _ in nx.eulerian_circuit(sub, source=DEPOT_ID):
            if a != DEPOT_ID and a not in route:
                route.append(a)
    return route


def decode_solution(built: BuiltModel, assignment: Mapping[int, float]) -> RoutingSolution:
    """
    Rebuild routes and deliveries from an integral assignment.

    Each vehicle's used arcs are walked as an Euler circuit from the depot and
    shortcut to a simple route. Deliveries are recomputed exactly by max-flow
    over the visited sets, so the result has integer quantities.

    Raises:
        DecodeError: On depot-free cycles, open routes or uncoverable demand
    """
    fleet = built.fleet
    routes: list[list[int]] = []
    types: list[Optional[str]] = []
    for vehicle in fleet.vehicles:
        v = vehicle.index
        layers = _vehicle_layers(built, v, assignment)
        if len(layers) > 1:
            raise DecodeError(f"Vehicle {v} uses arcs of several types {sorted(layers)}")
        if not layers:
            routes.append([])
            types.append(vehicle.type_id)
            continue
        (t, used), = layers.items()
        routes.append(_route_from_arcs(built, v, used, assignment))
        types.append(t if fleet.mode is FleetMode.FLEXIBLE else vehicle.type_id)

    for v, route in enumerate(routes):
        if not route and fleet.mode is FleetMode.FLEXIBLE:
            types[v] = None

    capacities, compatible = [], []
    for v, vehicle in enumerate(fleet.vehicles):
        if fleet.mode is FleetMode.STABLE:
            capacities.append(vehicle.capacity)
            compatible.append(vehicle.compatible)
        elif types[v] is None:
            capacities.append(0)
            compatible.append(frozenset())
        else:
            vt = fleet.type_of(types[v])
            capacities.append(vt.capacity)
            compatible.append(vt.compatible)

    deliveries = assign_deliveries(built.instance, routes, capacities, compatible)
    if deliveries is None:
        raise DecodeError("Decoded routes cannot cover the demand")

    solution = RoutingSolution(routes=routes, deliveries=deliveries, types=types)
    from fleet_routing.checker import objective_of

    solution.objective = objective_of(built.instance, fleet, solution)
    return solution


def values_of(built: BuiltModel, assignment: Assignment, symbol: str) -> Iterator[tuple[tuple, float]]:
    """(subscripts, value) of every variable of one symbol."""
    for key, var in getattr(built.catalog, symbol).items():
        yield (key if isinstance(key, tuple) else (key,)), assignment.get(var, 0.0)
