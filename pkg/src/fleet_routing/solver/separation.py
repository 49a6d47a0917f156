"""
Sub-tour separation on integral points.
[CTX:PBI-3:3-3:SEPARATION]

For each vehicle (and type layer in Flexible models) the used arcs form a
graph; every weakly connected component that misses the depot is a sub-tour
S, cut off by Σ_{i,j ∈ S} x[v,(t),i,j] <= |S| − 1.
"""
import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Optional, Sequence

import networkx as nx

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.instance import DEPOT_ID
from fleet_routing.mip.model import LazyCut, Sense

if TYPE_CHECKING:
    from fleet_routing.formulations import VariableCatalog

logger = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6


class SeparationError(FleetRoutingError):
    """Raised when separation is asked to work on a fractional point."""
    pass


@dataclass(frozen=True)
class Subtour:
    """A depot-free component of one vehicle's used arcs."""
    vehicle: int
    customers: frozenset[int]
    type_id: Optional[str] = None

    def label(self) -> str:
        return "-".join(str(i) for i in sorted(self.customers))


def separate_subtours(catalog: "VariableCatalog", values: Mapping[int, float]) -> list[Subtour]:
    """
    Find every depot-free component of the used-arc graphs.

    Args:
        catalog: Symbol catalogue of the model
        values: Point to inspect; x must be integral

    Returns:
        Sub-tours ordered by vehicle, type and smallest customer id

    Raises:
        SeparationError: If some x value is fractional
    """
    layers: dict[tuple[int, Optional[str]], list[tuple[int, int]]] = {}
    for key, var in catalog.x.items():
        value = values.get(var, 0.0)
        if min(abs(value), abs(value - 1.0)) > INTEGRALITY_TOL:
            raise SeparationError(f"Arc variable x[{key}] is fractional ({value})")
        if value < 0.5:
            continue
        if len(key) == 4:
            v, t, i, j = key
        else:
            (v, i, j), t = key, None
        layers.setdefault((v, t), []).append((i, j))

    found = []
    for (v, t), used in sorted(layers.items(), key=lambda item: (item[0][0], item[0][1] or "")):
        graph = nx.DiGraph(used)
        components = [c for c in nx.weakly_connected_components(graph) if DEPOT_ID not in c]
        for component in sorted(components, key=min):
            found.append(Subtour(vehicle=v, customers=frozenset(component), type_id=t))
    if found:
        logger.debug(
            f"[CTX:PBI-3:3-3:SEPARATION] {len(found)} sub-tours: "
            + ", ".join(f"v{s.vehicle}:{s.label()}" for s in found)
        )
    return found


def subtour_cuts(
    catalog: "VariableCatalog",
    subtour: Subtour,
    type_ids: Sequence[str] = (),
) -> list[LazyCut]:
    """
    Rows eliminating a sub-tour.

    In Flexible models one row is produced per type layer, so the vehicle
    cannot recreate the cycle by switching type.
    """
    members = sorted(subtour.customers)
    layers: list[Optional[str]] = [subtour.type_id] if subtour.type_id is None else list(type_ids) or [subtour.type_id]
    cuts = []
    for t in layers:
        coeffs = {
            catalog.x_var(subtour.vehicle, i, j, t): 1.0
            for i in members
            for j in members
            if i != j
        }
        suffix = "" if t is None else f",t={t}"
        cuts.append(LazyCut(
            coeffs=coeffs,
            sense=Sense.LE,
            rhs=float(len(members) - 1),
            tag=f"subtours[v={subtour.vehicle}{suffix},S={subtour.label()}]",
        ))
    return cuts
