"""
Shared fixtures: small hand-built instances, fleets and clocks.
"""
from typing import Mapping, Optional, Sequence

import pytest

from fleet_routing.core.clock import FakeTimeProvider
from fleet_routing.core.telemetry import TelemetryRecorder, set_recorder
from fleet_routing.instance import Customer, Fleet, Instance, VehicleType, euclidean_matrix

TRUCK = VehicleType("truck", 10, 1.0, frozenset({"general"}))
REFRIGERATED = VehicleType("refrigerated", 10, 1.5, frozenset({"chilled", "ambient"}))
REGULAR = VehicleType("regular", 14, 1.0, frozenset({"ambient"}))


def make_instance(
    customers: Sequence[tuple[int, float, float, Mapping[str, int]]],
    commodities: Sequence[str] = ("general",),
    types: Sequence[VehicleType] = (TRUCK,),
    depot: tuple[float, float] = (0.0, 0.0),
    name: str = "test",
    fleet_spec: Optional[dict] = None,
) -> Instance:
    """Instance with Euclidean distances from (id, x, y, demand) tuples."""
    built = [
        Customer(id=cid, x=float(x), y=float(y), demand={k: int(demand.get(k, 0)) for k in commodities})
        for cid, x, y, demand in customers
    ]
    return Instance(
        depot=depot,
        customers=tuple(built),
        commodities=tuple(commodities),
        vehicle_types=tuple(types),
        dist=euclidean_matrix([depot] + [(c.x, c.y) for c in built]),
        name=name,
        fleet_spec=fleet_spec,
    )


@pytest.fixture
def line_instance() -> Instance:
    """Three customers, one commodity, one truck type of capacity 10."""
    return make_instance([
        (1, 3.0, 0.0, {"general": 4}),
        (2, 6.0, 0.0, {"general": 3}),
        (3, 0.0, 4.0, {"general": 5}),
    ], name="line")


@pytest.fixture
def split_instance() -> Instance:
    """One customer whose demand exceeds the capacity of a single truck."""
    return make_instance([(1, 3.0, 4.0, {"general": 25})], name="split")


@pytest.fixture
def two_commodity_instance() -> Instance:
    """Chilled goods need the refrigerated type; ambient goods fit both types."""
    return make_instance(
        [
            (1, 4.0, 0.0, {"chilled": 3, "ambient": 2}),
            (2, 0.0, 5.0, {"chilled": 0, "ambient": 6}),
            (3, -3.0, 0.0, {"chilled": 2, "ambient": 0}),
        ],
        commodities=("chilled", "ambient"),
        types=(REFRIGERATED, REGULAR),
        name="two-commodity",
    )


@pytest.fixture
def line_stable_fleet(line_instance) -> Fleet:
    return Fleet.stable(line_instance.vehicle_types, {"truck": 2})


@pytest.fixture
def line_flexible_fleet(line_instance) -> Fleet:
    return Fleet.flexible(line_instance.vehicle_types, 2)


@pytest.fixture
def fake_clock() -> FakeTimeProvider:
    """A clock that advances one millisecond per reading."""
    return FakeTimeProvider(initial_time=1000.0, tick=0.001)


@pytest.fixture
def recorder():
    """A fresh global recorder, reset after the test."""
    fresh = TelemetryRecorder(collect_stats=True)
    set_recorder(fresh)
    yield fresh
    set_recorder(TelemetryRecorder())
