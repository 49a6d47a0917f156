"""
Valid cuts and symmetry-breaking rows for built models.
[CTX:PBI-2:2-3:STRENGTHEN]

Every family is independently switchable. Families are added before the
model is frozen; each row is tagged with its family name so audits and tests
can count them.

Conventions shared with the builders: u[v] = 1 means "vehicle unused", the
customer order of the instance defines positions, and in Flexible models
every arc family is stated per type layer.
"""
import json
import logging
import threading
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from fleet_routing.checker import OracleGuardError, OracleInfeasibleError, brute_force_optimum
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.formulations import BuiltModel, RoutingKind
from fleet_routing.instance import DEPOT_ID, Fleet, FleetMode, Instance, instance_to_document
from fleet_routing.mip.model import Sense

logger = logging.getLogger(__name__)

CUT_FAMILIES = (
    "min_visits",
    "min_vehicles",
    "max_vehicles",
    "fractional_subtour",
    "depot_outdegree",
    "single_visit",
)
SYMMETRY_FAMILIES = (
    "usage_order",
    "visit_order",
    "fleet_order",
    "customer_assignment",
    "total_load",
)
# Families driven by the `--ordering` flag rather than `--symmetry`
ORDERING_FAMILIES = ("customer_assignment",)
PRESETS = ("base", "cuts", "symmetry", "full")


class StrengthenConfigError(FleetRoutingError):
    """Raised when a family is unknown or does not apply to a model kind."""
    pass


@dataclass(frozen=True)
class StrengthenConfig:
    """
    Which cut and symmetry families to add.

    Attributes:
        cuts: Enabled valid-cut families
        symmetry: Enabled symmetry/ordering families
        reorder_customers: Re-index customers farthest-first before building
        check_max_vehicles: Verify the max-vehicles bound with the exact
            oracle on small instances and skip the family when it would cut
            the optimum
    """
    cuts: frozenset[str] = frozenset()
    symmetry: frozenset[str] = frozenset()
    reorder_customers: bool = False
    check_max_vehicles: bool = True

    def __post_init__(self):
        object.__setattr__(self, "cuts", frozenset(self.cuts))
        object.__setattr__(self, "symmetry", frozenset(self.symmetry))
        unknown = (self.cuts - set(CUT_FAMILIES)) | (self.symmetry - set(SYMMETRY_FAMILIES))
        if unknown:
            raise StrengthenConfigError(f"Unknown families {sorted(unknown)}")

    @property
    def families(self) -> frozenset[str]:
        return self.cuts | self.symmetry

    def enabled(self, family: str) -> bool:
        return family in self.cuts or family in self.symmetry

    @property
    def reorders(self) -> bool:
        """Customer assignment relies on the farthest customer being first."""
        return self.reorder_customers or "customer_assignment" in self.symmetry

    def validate(self, fleet_kind: FleetMode, routing_kind: RoutingKind) -> None:
        """
        Raises:
            StrengthenConfigError: total_load without commodity flow, or
                fleet_order without a Flexible fleet
        """
        if "total_load" in self.symmetry and RoutingKind(routing_kind) is not RoutingKind.COMMODITY:
            raise StrengthenConfigError("total_load requires commodity-flow routing")
        if "fleet_order" in self.symmetry and FleetMode(fleet_kind) is not FleetMode.FLEXIBLE:
            raise StrengthenConfigError("fleet_order requires a Flexible fleet")

    def without(self, *families: str) -> "StrengthenConfig":
        drop = set(families)
        return replace(self, cuts=self.cuts - drop, symmetry=self.symmetry - drop)

    def label(self) -> str:
        ordered = [f for f in CUT_FAMILIES + SYMMETRY_FAMILIES if self.enabled(f)]
        if self.reorder_customers and "customer_assignment" not in self.symmetry:
            ordered.append("reorder")
        return "+".join(ordered) or "base"


@dataclass(frozen=True)
class StrengthenContext:
    """
    Quantities derived once per built model.

    Attributes:
        v_dep: Lower bound on vehicles staying at the depot
        pi: First vehicle of each type pool (Stable) or the anchor vehicle (Flexible)
        farthest: Id of the farthest customer (first in the customer order)
        cap_max: Largest capacity in the fleet
        vehicle_limit: Sum over customers of ceil(dem_i / cap_min)
    """
    v_dep: int
    pi: tuple[int, ...]
    farthest: int
    cap_max: int
    vehicle_limit: int


def compatible_families(fleet_kind: FleetMode, routing_kind: RoutingKind) -> tuple[str, ...]:
    """All families that apply to a model kind, in canonical order."""
    families = []
    for family in CUT_FAMILIES + SYMMETRY_FAMILIES:
        if family == "total_load" and RoutingKind(routing_kind) is not RoutingKind.COMMODITY:
            continue
        if family == "fleet_order" and FleetMode(fleet_kind) is not FleetMode.FLEXIBLE:
            continue
        families.append(family)
    return tuple(families)


def preset_config(name: str, fleet_kind: FleetMode, routing_kind: RoutingKind) -> StrengthenConfig:
    """
    Named configurations mirroring the progression of the result tables.

    base: nothing; cuts: all six cut families; symmetry: cuts plus usage and
    visit order, fleet order (Flexible) and total load (commodity flow);
    full: symmetry plus customer assignment and farthest-first reordering.
    """
    allowed = set(compatible_families(fleet_kind, routing_kind))
    if name == "base":
        return StrengthenConfig()
    cuts = frozenset(CUT_FAMILIES)
    if name == "cuts":
        return StrengthenConfig(cuts=cuts)
    symmetry = frozenset(
        f for f in ("usage_order", "visit_order", "fleet_order", "total_load") if f in allowed
    )
    if name == "symmetry":
        return StrengthenConfig(cuts=cuts, symmetry=symmetry)
    if name == "full":
        return StrengthenConfig(
            cuts=cuts,
            symmetry=symmetry | {"customer_assignment"},
            reorder_customers=True,
        )
    raise StrengthenConfigError(f"Unknown preset '{name}', expected one of {list(PRESETS)}")


def parse_family_list(text: Optional[str], allowed: Sequence[str]) -> frozenset[str]:
    """
    Parse `all`, `none` or a comma list of family names.

    Args:
        text: Flag value (None behaves like `none`)
        allowed: Families accepted by the flag; `all` expands to these

    Raises:
        StrengthenConfigError: For a name outside `allowed`
    """
    if text is None:
        return frozenset()
    value = text.strip().lower()
    if value in ("", "none"):
        return frozenset()
    if value == "all":
        return frozenset(allowed)
    names = [part.strip() for part in value.split(",") if part.strip()]
    unknown = [n for n in names if n not in allowed]
    if unknown:
        raise StrengthenConfigError(f"Unknown families {unknown}; expected a subset of {list(allowed)}")
    return frozenset(names)


# ---------------------------------------------------------------------------
# Derived quantities
# ---------------------------------------------------------------------------


def reorder_customers_farthest_first(inst: Instance) -> Instance:
    """Re-index customers by decreasing depot distance, ties by id."""
    order = sorted(inst.customers, key=lambda c: (-inst.distance(DEPOT_ID, c.id), c.id))
    ids = [c.id for c in order]
    if ids == inst.customer_ids:
        return inst
    return inst.with_customer_order(ids)


def vehicle_limit(inst: Instance, fleet: Fleet) -> int:
    """Sum over customers of ceil(dem_i / cap_min)."""
    return sum(-(-c.total_demand // fleet.cap_min) for c in inst.customers)


def compute_context(built: BuiltModel) -> StrengthenContext:
    inst, fleet = built.instance, built.fleet
    limit = vehicle_limit(inst, fleet)
    if fleet.mode is FleetMode.STABLE:
        pi = tuple(v.index for v in fleet.pool_firsts())
    else:
        pi = (0,) if fleet.size else ()
    return StrengthenContext(
        v_dep=max(0, fleet.size - limit),
        pi=pi,
        farthest=inst.customers[0].id,
        cap_max=fleet.cap_max,
        vehicle_limit=limit,
    )


_safety_lock = threading.Lock()
_safety_cache: dict[tuple[str, str], bool] = {}


def max_vehicles_bound_is_safe(inst: Instance, fleet: Fleet) -> bool:
    """
    Check with the exact oracle that capping used vehicles keeps the optimum.

    Instances beyond the oracle guard are reported safe (unchecked). Results
    are cached per (instance, fleet) document.
    """
    limit = vehicle_limit(inst, fleet)
    if limit >= fleet.size:
        return True
    key = (
        json.dumps(instance_to_document(inst), sort_keys=True),
        json.dumps(fleet.to_document(), sort_keys=True),
    )
    with _safety_lock:
        if key in _safety_cache:
            return _safety_cache[key]
    try:
        free, _ = brute_force_optimum(inst, fleet)
    except OracleGuardError:
        logger.debug(f"[CTX:PBI-2:2-3:STRENGTHEN] {inst.name}: max-vehicles bound unchecked (beyond oracle guard)")
        return True
    try:
        capped, _ = brute_force_optimum(inst, fleet, max_used=limit)
        safe = capped <= free + 1e-9 * max(1.0, abs(free))
    except OracleInfeasibleError:
        safe = False
    with _safety_lock:
        _safety_cache[key] = safe
    return safe


# ---------------------------------------------------------------------------
# Row helpers
# ---------------------------------------------------------------------------


def _layers(built: BuiltModel) -> list[Optional[str]]:
    if built.fleet_kind is FleetMode.FLEXIBLE:
        return [vt.id for vt in built.fleet.types]
    return [None]


def _layer_suffix(t: Optional[str]) -> str:
    return "" if t is None else f",t={t}"


def _arcs(built: BuiltModel, v: int, t: Optional[str] = None, *, tail=None, head=None) -> list[int]:
    """Arc variables of vehicle v (one layer, or all when t is None) filtered by end points."""
    flexible = built.fleet_kind is FleetMode.FLEXIBLE
    selected = []
    for layer, i, j, var in built.catalog.arc_vars(v):
        if flexible and t is not None and layer != t:
            continue
        if tail is not None and i != tail:
            continue
        if head is not None and j != head:
            continue
        selected.append(var)
    return selected


def _chains(built: BuiltModel, anchored: bool) -> list[list[int]]:
    """Vehicle sequences along which ordering rows run."""
    fleet = built.fleet
    if fleet.mode is FleetMode.STABLE:
        return [[v.index for v in fleet.pool(vt.id)] for vt in fleet.types]
    indices = [v.index for v in fleet.vehicles]
    return [indices[1:] if anchored else indices]


def _pairs(chains: Iterable[list[int]]) -> Iterable[tuple[int, int]]:
    for chain in chains:
        yield from zip(chain, chain[1:])


def _depot_departures(built: BuiltModel, v: int) -> dict[int, float]:
    inst = built.instance
    return {
        built.catalog.f[(v, k, DEPOT_ID, j)]: 1.0
        for k in inst.commodities
        for j in inst.customer_ids
        if (v, k, DEPOT_ID, j) in built.catalog.f
    }


# ---------------------------------------------------------------------------
# Valid cuts
# ---------------------------------------------------------------------------


def _min_visits(built: BuiltModel, ctx: StrengthenContext) -> int:
    model, fleet = built.model, built.fleet
    for customer in built.instance.customers:
        row = {var: 1.0 for v in fleet.vehicles for var in built.catalog.arcs_into(v.index, customer.id)}
        rhs = -(-customer.total_demand // ctx.cap_max)
        model.add_linear_constraint(row, Sense.GE, rhs, tag=f"min_visits[i={customer.id}]")
    return built.instance.n_customers


def _min_vehicles(built: BuiltModel, ctx: StrengthenContext) -> int:
    inst, fleet, model, catalog = built.instance, built.fleet, built.model, built.catalog
    if fleet.mode is FleetMode.STABLE:
        needed = -(-inst.total_demand() // ctx.cap_max)
        row = {catalog.u[v.index]: 1.0 for v in fleet.vehicles}
        model.add_linear_constraint(row, Sense.LE, fleet.size - needed, tag="min_vehicles")
        return 1
    added = 0
    for commodity in inst.commodities:
        demand = inst.total_demand(commodity)
        if demand <= 0:
            continue
        row = {
            catalog.z[(v.index, vt.id)]: float(vt.capacity * vt.comp(commodity))
            for v in fleet.vehicles
            for vt in fleet.types
            if vt.comp(commodity)
        }
        model.add_linear_constraint(row, Sense.GE, demand, tag=f"min_vehicles[k={commodity}]")
        added += 1
    return added


def _max_vehicles(built: BuiltModel, ctx: StrengthenContext, check: bool) -> int:
    if ctx.v_dep <= 0:
        logger.debug(f"[CTX:PBI-2:2-3:STRENGTHEN] {built.model.name}: V_dep = 0, max_vehicles adds nothing")
        return 0
    if check and not max_vehicles_bound_is_safe(built.instance, built.fleet):
        logger.warning(
            f"[CTX:PBI-2:2-3:STRENGTHEN] {built.model.name}: max_vehicles bound "
            f"(V_dep={ctx.v_dep}) would cut the optimum; family disabled"
        )
        return 0
    row = {built.catalog.u[v.index]: 1.0 for v in built.fleet.vehicles}
    built.model.add_linear_constraint(row, Sense.GE, ctx.v_dep, tag="max_vehicles")
    return 1


def _fractional_subtour(built: BuiltModel, ctx: StrengthenContext) -> int:
    inst, catalog, model = built.instance, built.catalog, built.model
    ids = inst.location_ids
    added = 0
    for vehicle in built.fleet.vehicles:
        v = vehicle.index
        for t in _layers(built):
            for i in inst.customer_ids:
                for j in inst.customer_ids:
                    if i == j:
                        continue
                    row = {catalog.x_var(v, i, j, t): 1.0}
                    for l in ids:
                        if l != i and l != j:
                            row[catalog.x_var(v, j, l, t)] = -1.0
                    model.add_linear_constraint(
                        row, Sense.LE, 0.0,
                        tag=f"fractional_subtour[v={v}{_layer_suffix(t)},i={i},j={j}]",
                    )
                    added += 1
    return added


def _depot_outdegree(built: BuiltModel, ctx: StrengthenContext) -> int:
    for vehicle in built.fleet.vehicles:
        v = vehicle.index
        row = {var: 1.0 for var in _arcs(built, v, tail=DEPOT_ID)}
        row[built.catalog.u[v]] = 1.0
        built.model.add_linear_constraint(row, Sense.EQ, 1.0, tag=f"depot_outdegree[v={v}]")
    return built.fleet.size


def _single_visit(built: BuiltModel, ctx: StrengthenContext) -> int:
    added = 0
    for vehicle in built.fleet.vehicles:
        v = vehicle.index
        for i in built.instance.customer_ids:
            for direction, arcs in (("out", _arcs(built, v, tail=i)), ("in", _arcs(built, v, head=i))):
                built.model.add_linear_constraint(
                    {var: 1.0 for var in arcs}, Sense.LE, 1.0,
                    tag=f"single_visit[v={v},i={i},dir={direction}]",
                )
                added += 1
    return added


def apply_valid_cuts(built: BuiltModel, config: Optional[StrengthenConfig] = None) -> int:
    """
    Add every enabled valid-cut family.

    Returns:
        Number of rows added
    """
    config = config or built.config or StrengthenConfig()
    config.validate(built.fleet_kind, built.routing_kind)
    ctx = built.context or compute_context(built)
    built.context = ctx
    total = 0
    for family in CUT_FAMILIES:
        if family not in config.cuts:
            continue
        if family == "max_vehicles":
            added = _max_vehicles(built, ctx, config.check_max_vehicles)
        else:
            added = _CUT_BUILDERS[family](built, ctx)
        built.families_added[family] = added
        total += added
    logger.debug(f"[CTX:PBI-2:2-3:STRENGTHEN] {built.model.name}: {total} cut rows {sorted(config.cuts)}")
    return total


_CUT_BUILDERS = {
    "min_visits": _min_visits,
    "min_vehicles": _min_vehicles,
    "fractional_subtour": _fractional_subtour,
    "depot_outdegree": _depot_outdegree,
    "single_visit": _single_visit,
}


# ---------------------------------------------------------------------------
# Symmetry breaking
# ---------------------------------------------------------------------------


def _usage_order(built: BuiltModel, ctx: StrengthenContext, anchored: bool) -> int:
    # Used vehicles first: u[v-1] = 1 (unused) forces u[v] = 1. The chain
    # always includes the anchor.
    catalog = built.catalog
    added = 0
    for previous, v in _pairs(_chains(built, anchored=False)):
        built.model.add_linear_constraint(
            {catalog.u[previous]: 1.0, catalog.u[v]: -1.0}, Sense.LE, 0.0, tag=f"usage_order[v={v}]"
        )
        added += 1
    return added


def _visit_order(built: BuiltModel, ctx: StrengthenContext, anchored: bool) -> int:
    inst, catalog, fleet = built.instance, built.catalog, built.fleet
    flexible = fleet.mode is FleetMode.FLEXIBLE
    customers = inst.customer_ids
    type_ids = [vt.id for vt in fleet.types]
    added = 0
    for previous, v in _pairs(_chains(built, anchored)):
        for ti, t in enumerate(_layers(built)):
            # Arcs of the previous vehicle into customer l, grouped by l
            into = {l: _arcs(built, previous, t, head=l) for l in customers}
            earlier_types = (
                {catalog.z[(previous, u)]: -1.0 for u in type_ids[:ti]} if flexible else {}
            )
            for pos_j, j in enumerate(customers):
                prefix = [var for l in customers[: pos_j + 1] for var in into[l]]
                for i in customers:
                    if i == j:
                        continue
                    row = {var: -1.0 for var in prefix}
                    row.update(earlier_types)
                    row[catalog.x_var(v, i, j, t)] = 1.0
                    built.model.add_linear_constraint(
                        row, Sense.LE, 0.0,
                        tag=f"visit_order[v={v}{_layer_suffix(t)},i={i},j={j}]",
                    )
                    added += 1
    return added


def _fleet_order(built: BuiltModel, ctx: StrengthenContext, anchored: bool) -> int:
    catalog = built.catalog
    type_ids = [vt.id for vt in built.fleet.types]
    added = 0
    for previous, v in _pairs(_chains(built, anchored)):
        for ti, t in enumerate(type_ids):
            row = {catalog.z[(previous, tau)]: -1.0 for tau in type_ids[: ti + 1]}
            row[catalog.z[(v, t)]] = 1.0
            built.model.add_linear_constraint(row, Sense.LE, 0.0, tag=f"fleet_order[v={v},t={t}]")
            added += 1
    return added


def _customer_assignment(built: BuiltModel, ctx: StrengthenContext, anchored: bool) -> int:
    inst = built.instance
    target = ctx.farthest
    reach = inst.distance(DEPOT_ID, target)
    if any(inst.distance(DEPOT_ID, c) > reach + 1e-9 for c in inst.customer_ids):
        raise StrengthenConfigError(
            f"customer_assignment needs the farthest customer first; {target} is not "
            f"(reorder customers farthest-first)"
        )
    row = {var: 1.0 for v in ctx.pi for var in _arcs(built, v, head=target)}
    if not row:
        return 0
    sense = Sense.EQ if built.fleet_kind is FleetMode.FLEXIBLE else Sense.GE
    built.model.add_linear_constraint(row, sense, 1.0, tag="customer_assignment")
    return 1


def _total_load(built: BuiltModel, ctx: StrengthenContext, anchored: bool) -> int:
    catalog, fleet = built.catalog, built.fleet
    added = 0
    for vehicle in fleet.vehicles:
        v = vehicle.index
        departures = _depot_departures(built, v)
        if fleet.mode is FleetMode.STABLE:
            # Loaded to capacity when used: sum f(dep, .) = cap_v * (1 - u_v)
            row = dict(departures)
            row[catalog.u[v]] = float(vehicle.capacity)
            built.model.add_linear_constraint(row, Sense.EQ, vehicle.capacity, tag=f"total_load[v={v}]")
            added += 1
            continue
        capacity = {catalog.z[(v, vt.id)]: -float(vt.capacity) for vt in fleet.types}
        upper = {**departures, **capacity}
        built.model.add_linear_constraint(upper, Sense.LE, 0.0, tag=f"total_load[v={v},side=upper]")
        lower = {**departures, **capacity, catalog.u[v]: float(ctx.cap_max)}
        built.model.add_linear_constraint(lower, Sense.GE, 0.0, tag=f"total_load[v={v},side=lower]")
        added += 2
    return added


_SYMMETRY_BUILDERS = {
    "usage_order": _usage_order,
    "visit_order": _visit_order,
    "fleet_order": _fleet_order,
    "customer_assignment": _customer_assignment,
    "total_load": _total_load,
}


def apply_symmetry(built: BuiltModel, config: Optional[StrengthenConfig] = None) -> int:
    """
    Add every enabled symmetry-breaking family.

    With customer assignment in a Flexible model vehicle 0 is the anchor
    visiting the farthest customer, and the visit-order and fleet-order
    chains start at vehicle 1. Usage order always chains the whole fleet,
    anchor included: the anchor is used, so u[0] = 0 costs nothing.

    Returns:
        Number of rows added

    Raises:
        StrengthenConfigError: If a family does not apply to the kind
    """
    config = config or built.config or StrengthenConfig()
    config.validate(built.fleet_kind, built.routing_kind)
    ctx = built.context or compute_context(built)
    built.context = ctx
    anchored = (
        built.fleet_kind is FleetMode.FLEXIBLE and "customer_assignment" in config.symmetry
    )
    total = 0
    for family in SYMMETRY_FAMILIES:
        if family not in config.symmetry:
            continue
        added = _SYMMETRY_BUILDERS[family](built, ctx, anchored)
        built.families_added[family] = added
        total += added
    logger.debug(f"[CTX:PBI-2:2-3:STRENGTHEN] {built.model.name}: {total} symmetry rows {sorted(config.symmetry)}")
    return total


def anchored_chains(built: BuiltModel) -> bool:
    """Whether vehicle 0 is the customer-assignment anchor of a Flexible model."""
    config = built.config
    return (
        config is not None
        and built.fleet_kind is FleetMode.FLEXIBLE
        and "customer_assignment" in config.symmetry
    )
