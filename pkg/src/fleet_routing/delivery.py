"""
Delivery assignment by max-flow.
[CTX:PBI-4:4-1:SOLUTION]

Once the set of customers each vehicle visits is fixed, deciding who delivers
what is a transportation problem: source -> (customer, commodity) with the
demand as capacity, (customer, commodity) -> vehicle when the vehicle visits
the customer and may carry the commodity, vehicle -> sink with its capacity.
Integer capacities give an integral maximum flow.
"""
from typing import Optional, Sequence

import networkx as nx

from fleet_routing.instance import Instance

_SOURCE = "source"
_SINK = "sink"


def assign_deliveries(
    inst: Instance,
    visits: Sequence[Sequence[int]],
    capacities: Sequence[int],
    compatible: Sequence[frozenset[str]],
) -> Optional[list[dict[int, dict[str, int]]]]:
    """
    Split every demand across the vehicles that visit the customer.

    Args:
        inst: Instance supplying the demands
        visits: Per vehicle, the customers it visits
        capacities: Per vehicle, its capacity
        compatible: Per vehicle, the commodities it may carry

    Returns:
        Per vehicle deliveries (customer -> commodity -> qty), or None when
        some demand cannot be covered
    """
    graph = nx.DiGraph()
    graph.add_node(_SOURCE)
    graph.add_node(_SINK)
    total = 0
    for customer in inst.customers:
        for commodity in inst.commodities:
            qty = customer.dem(commodity)
            if qty > 0:
                graph.add_edge(_SOURCE, ("d", customer.id, commodity), capacity=qty)
                total += qty
    for v, customers in enumerate(visits):
        if not customers:
            continue
        graph.add_edge(("v", v), _SINK, capacity=capacities[v])
        for customer_id in set(customers):
            for commodity in compatible[v]:
                node = ("d", customer_id, commodity)
                if graph.has_node(node):
                    # No capacity attribute means unbounded
                    graph.add_edge(node, ("v", v))
    if total == 0:
        return [{} for _ in visits]

    value, flow = nx.maximum_flow(graph, _SOURCE, _SINK)
    if value < total:
        return None

    deliveries: list[dict[int, dict[str, int]]] = [{} for _ in visits]
    for node, out in flow.items():
        if not (isinstance(node, tuple) and node[0] == "d"):
            continue
        _, customer_id, commodity = node
        for target, qty in out.items():
            if qty > 0:
                v = target[1]
                deliveries[v].setdefault(customer_id, {})[commodity] = int(round(qty))
    return deliveries


def shortfall_commodity(
    inst: Instance,
    capacities: Sequence[int],
    compatible: Sequence[frozenset[str]],
) -> Optional[str]:
    """First commodity whose demand exceeds the capacity able to carry it, if any."""
    for commodity in inst.commodities:
        able = sum(cap for cap, comp in zip(capacities, compatible) if commodity in comp)
        if inst.total_demand(commodity) > able:
            return commodity
    return None
