"""
Encoding of routing solutions as MIP starting assignments.
[CTX:PBI-4:4-4:ENCODE]

Symmetry rows constrain vehicle labels, not routes, so vehicles are first
relabelled into the canonical order the active families expect:

- Stable: within each pool, used vehicles first, ordered by the position of
  the earliest customer they visit.
- Flexible: optionally an anchor visiting the farthest customer in slot 0,
  then used vehicles by (type order, earliest position), unused vehicles last
  with the last type.

The assignment is then replayed against every row of the model.
"""
import logging
from typing import Optional

from fleet_routing.formulations import BuiltModel, RoutingKind
from fleet_routing.instance import DEPOT_ID, FleetMode
from fleet_routing.mip.model import Assignment
from fleet_routing.solver.branch_and_bound import WarmStartError
from fleet_routing.strengthen import anchored_chains
from fleet_routing.warmstart.solution import RoutingSolution

logger = logging.getLogger(__name__)


def _earliest(built: BuiltModel, route: list[int]) -> int:
    return min(built.instance.position(i) for i in route)


def canonical_order(built: BuiltModel, solution: RoutingSolution) -> list[int]:
    """
    Source vehicle for every slot of the built fleet.

    Raises:
        WarmStartError: If the solution does not fit the fleet
    """
    fleet = built.fleet
    if solution.n_vehicles != fleet.size:
        raise WarmStartError(
            f"Solution has {solution.n_vehicles} vehicles, model fleet has {fleet.size}"
        )
    routes = solution.routes

    if fleet.mode is FleetMode.STABLE:
        order: list[int] = []
        for vt in fleet.types:
            pool = [v.index for v in fleet.pool(vt.id)]
            for v in pool:
                if routes[v] and solution.types[v] not in (None, vt.id):
                    raise WarmStartError(f"Vehicle {v} drives as {solution.types[v]} inside pool {vt.id}")
            order.extend(sorted(
                pool,
                key=lambda v: (not routes[v], _earliest(built, routes[v]) if routes[v] else 0, v),
            ))
        return order

    type_rank = {vt.id: r for r, vt in enumerate(fleet.types)}
    used = [v for v in range(fleet.size) if routes[v]]
    for v in used:
        if solution.types[v] not in type_rank:
            raise WarmStartError(f"Vehicle {v} is used without a valid type ({solution.types[v]!r})")
    used.sort(key=lambda v: (type_rank[solution.types[v]], _earliest(built, routes[v]), v))
    unused = [v for v in range(fleet.size) if not routes[v]]

    if anchored_chains(built):
        farthest = built.context.farthest if built.context else built.instance.customers[0].id
        anchor = next((v for v in used if farthest in routes[v]), None)
        if anchor is None:
            raise WarmStartError(f"customer_assignment: no vehicle visits customer {farthest}")
        used.remove(anchor)
        return [anchor] + used + unused
    return used + unused


def encode_start(built: BuiltModel, solution: RoutingSolution) -> Assignment:
    """
    Complete assignment for a feasible routing solution.

    Sets x from route arcs (on the chosen type layer in Flexible models), y
    from deliveries, u = 1 exactly for empty routes, z one-hot, and f by
    prefix sums of the remaining deliveries along each route. With total
    load active, vehicles leave the depot full and carry the surplus back on
    their first compatible commodity.

    Raises:
        WarmStartError: If the solution does not fit the fleet or some row of
            the model is violated; the message names the first offending tag
    """
    inst, fleet, catalog, model = built.instance, built.fleet, built.catalog, built.model
    flexible = fleet.mode is FleetMode.FLEXIBLE
    full_load = built.config is not None and "total_load" in built.config.symmetry
    values: Assignment = {var: 0.0 for var in range(model.num_variables)}

    for slot, source in enumerate(canonical_order(built, solution)):
        route = solution.routes[source]
        if flexible:
            type_id: Optional[str] = solution.types[source] if route else fleet.types[-1].id
            vtype = fleet.type_of(type_id)
            values[catalog.z[(slot, type_id)]] = 1.0
        else:
            type_id = None
            vtype = fleet.type_of(fleet.vehicles[slot].type_id)
        values[catalog.u[slot]] = 0.0 if route else 1.0
        if not route:
            continue

        stops = [DEPOT_ID, *route, DEPOT_ID]
        for a, b in zip(stops, stops[1:]):
            values[catalog.x_var(slot, a, b, type_id)] = 1.0

        deliveries = solution.deliveries[source]
        for customer, per_k in deliveries.items():
            for commodity, qty in per_k.items():
                if not qty:
                    continue
                key = (slot, customer, commodity)
                if key not in catalog.y:
                    raise WarmStartError(f"Vehicle {slot} cannot carry '{commodity}'")
                values[catalog.y[key]] = float(qty)

        if built.routing_kind is not RoutingKind.COMMODITY:
            continue
        surplus = vtype.capacity - solution.load(source) if full_load else 0
        carrier = next(
            (k for k in inst.commodities if k in vtype.compatible and (slot, k, DEPOT_ID, route[0]) in catalog.f),
            None,
        )
        for commodity in inst.commodities:
            if (slot, commodity, DEPOT_ID, route[0]) not in catalog.f:
                continue
            remaining = [deliveries.get(i, {}).get(commodity, 0) for i in route]
            for m, (a, b) in enumerate(zip(stops, stops[1:])):
                load = float(sum(remaining[m:]))
                if commodity == carrier:
                    load += surplus
                values[catalog.f[(slot, commodity, a, b)]] = load

    violations = model.check_assignment(values)
    if violations:
        raise WarmStartError(f"Encoded start violates {violations[0].tag} ({violations[0]})", violations)
    logger.debug(
        f"[CTX:PBI-4:4-4:ENCODE] {model.name}: start with objective {model.evaluate(values):.4f} "
        f"({len(solution.used_vehicles())} vehicles)"
    )
    return values
