"""
Route-level helpers shared by construction and LNS.
"""
from typing import Sequence

from fleet_routing.instance import DEPOT_ID, Instance


def route_length(inst: Instance, route: Sequence[int]) -> float:
    """Length of depot -> route -> depot (0 for an empty route)."""
    if not route:
        return 0.0
    stops = [DEPOT_ID, *route, DEPOT_ID]
    return sum(inst.distance(a, b) for a, b in zip(stops, stops[1:]))


def cheapest_insertion(inst: Instance, route: Sequence[int], customer: int) -> tuple[float, int]:
    """
    Cheapest position to insert a customer.

    Returns:
        (added length, index in `route` to insert at); (0, -1) when the
        customer is already on the route
    """
    if customer in route:
        return 0.0, -1
    stops = [DEPOT_ID, *route, DEPOT_ID]
    best = (float("inf"), 0)
    for p in range(len(stops) - 1):
        a, b = stops[p], stops[p + 1]
        delta = inst.distance(a, customer) + inst.distance(customer, b) - inst.distance(a, b)
        if delta < best[0] - 1e-12:
            best = (delta, p)
    return best


def removal_saving(inst: Instance, route: Sequence[int], customer: int) -> float:
    """Length saved by removing a customer from a route."""
    p = route.index(customer)
    before = DEPOT_ID if p == 0 else route[p - 1]
    after = DEPOT_ID if p == len(route) - 1 else route[p + 1]
    return inst.distance(before, customer) + inst.distance(customer, after) - inst.distance(before, after)


def nearest_neighbour(inst: Instance, customers: Sequence[int]) -> list[int]:
    """Order customers by repeatedly visiting the closest unvisited one."""
    pending = list(customers)
    route: list[int] = []
    here = DEPOT_ID
    while pending:
        nxt = min(pending, key=lambda c: (inst.distance(here, c), c))
        route.append(nxt)
        pending.remove(nxt)
        here = nxt
    return route


def two_opt(inst: Instance, route: Sequence[int]) -> list[int]:
    """Intra-route 2-opt until no reversal shortens the route."""
    best = list(route)
    if len(best) < 3:
        return best
    improved = True
    while improved:
        improved = False
        stops = [DEPOT_ID, *best, DEPOT_ID]
        for a in range(len(stops) - 2):
            for b in range(a + 2, len(stops) - 1):
                i, i_next = stops[a], stops[a + 1]
                j, j_next = stops[b], stops[b + 1]
                delta = (
                    inst.distance(i, j) + inst.distance(i_next, j_next)
                    - inst.distance(i, i_next) - inst.distance(j, j_next)
                )
                if delta < -1e-9:
                    stops[a + 1:b + 1] = reversed(stops[a + 1:b + 1])
                    best = stops[1:-1]
                    improved = True
                    break
            if improved:
                break
    return best
