"""
Unit tests for encoding routing solutions as starting assignments.
[CTX:PBI-4:4-4:ENCODE]
"""
import pytest

from fleet_routing.formulations import BuildOptions, RoutingKind, build_model
from fleet_routing.instance import Fleet, FleetMode
from fleet_routing.solver import WarmStartError
from fleet_routing.strengthen import preset_config
from fleet_routing.warmstart import RoutingSolution
from fleet_routing.warmstart.encode import canonical_order, encode_start


@pytest.fixture
def line_solution():
    return RoutingSolution(
        routes=[[3], [1, 2]],
        deliveries=[{3: {"general": 5}}, {1: {"general": 4}, 2: {"general": 3}}],
        types=["truck", "truck"],
    )


@pytest.fixture
def two_commodity_solution():
    return RoutingSolution(
        routes=[[1, 3], [2]],
        deliveries=[{1: {"chilled": 3, "ambient": 2}, 3: {"chilled": 2}}, {2: {"ambient": 6}}],
        types=["refrigerated", "regular"],
    )


def _build(inst, fleet_kind, routing_kind, fleet, preset="base"):
    config = preset_config(preset, FleetMode(fleet_kind), RoutingKind(routing_kind))
    return build_model(inst, fleet_kind, routing_kind, options=BuildOptions(strengthen=config), fleet=fleet)


class TestCanonicalOrder:
    """Test vehicle relabelling."""

    def test_stable_pool_by_earliest_customer(self, line_instance, line_stable_fleet, line_solution):
        """Test the vehicle visiting customer 1 takes the first slot."""
        built = _build(line_instance, "stable", "vehicle", line_stable_fleet)

        assert canonical_order(built, line_solution) == [1, 0]

    def test_unused_last(self, line_instance, line_stable_fleet):
        built = _build(line_instance, "stable", "vehicle", line_stable_fleet)
        solution = RoutingSolution(
            routes=[[], [1, 2, 3]],
            deliveries=[{}, {1: {"general": 4}, 2: {"general": 3}, 3: {"general": 5}}],
            types=["truck", "truck"],
        )

        assert canonical_order(built, solution) == [1, 0]

    def test_flexible_anchor_first(self, two_commodity_instance, two_commodity_solution):
        """Test the vehicle visiting the farthest customer becomes slot 0."""
        fleet = Fleet.flexible(two_commodity_instance.vehicle_types, 2)
        built = _build(two_commodity_instance, "flexible", "vehicle", fleet, preset="full")

        assert built.context.farthest == 2
        assert canonical_order(built, two_commodity_solution) == [1, 0]

    def test_flexible_by_type_rank(self, two_commodity_instance, two_commodity_solution):
        """Test refrigerated vehicles come before regular ones without an anchor."""
        fleet = Fleet.flexible(two_commodity_instance.vehicle_types, 2)
        built = _build(two_commodity_instance, "flexible", "vehicle", fleet)
        swapped = RoutingSolution(
            routes=list(reversed(two_commodity_solution.routes)),
            deliveries=list(reversed(two_commodity_solution.deliveries)),
            types=list(reversed(two_commodity_solution.types)),
        )

        assert canonical_order(built, swapped) == [1, 0]

    def test_size_mismatch(self, line_instance, line_solution):
        fleet = Fleet.stable(line_instance.vehicle_types, {"truck": 3})
        built = _build(line_instance, "stable", "vehicle", fleet)

        with pytest.raises(WarmStartError, match="3"):
            canonical_order(built, line_solution)


class TestEncodeStart:
    """Test encoded starts satisfy every row of the model."""

    @pytest.mark.parametrize("routing_kind", ["vehicle", "commodity"])
    @pytest.mark.parametrize("preset", ["base", "cuts", "symmetry", "full"])
    def test_line_stable(self, line_instance, line_stable_fleet, line_solution, routing_kind, preset):
        """Test the optimal line routes encode feasibly under every preset."""
        built = _build(line_instance, "stable", routing_kind, line_stable_fleet, preset)

        values = encode_start(built, line_solution)

        assert built.model.check_assignment(values) == []
        assert built.model.evaluate(values) == pytest.approx(20.0)

    @pytest.mark.parametrize("fleet_kind", ["stable", "flexible"])
    @pytest.mark.parametrize("routing_kind", ["vehicle", "commodity"])
    @pytest.mark.parametrize("preset", ["base", "full"])
    def test_two_commodity(self, two_commodity_instance, two_commodity_solution, fleet_kind, routing_kind, preset):
        """Test typed routes encode feasibly in all four kinds."""
        if fleet_kind == "stable":
            fleet = Fleet.stable(two_commodity_instance.vehicle_types, {"refrigerated": 1, "regular": 1})
        else:
            fleet = Fleet.flexible(two_commodity_instance.vehicle_types, 2)
        built = _build(two_commodity_instance, fleet_kind, routing_kind, fleet, preset)

        values = encode_start(built, two_commodity_solution)

        assert built.model.evaluate(values) == pytest.approx(31.0)

    def test_total_load_surplus(self, line_instance, line_stable_fleet, line_solution):
        """Test vehicles leave the depot full when total load is active."""
        built = _build(line_instance, "stable", "commodity", line_stable_fleet, "symmetry")

        values = encode_start(built, line_solution)

        slot = 0
        first = line_solution.routes[1][0]
        assert values[built.catalog.f[(slot, "general", 0, first)]] == pytest.approx(10.0)

    def test_infeasible_start(self, line_instance, line_stable_fleet):
        """Test an overloaded truck is reported by its violated row."""
        built = _build(line_instance, "stable", "vehicle", line_stable_fleet)
        solution = RoutingSolution(
            routes=[[1, 2, 3], []],
            deliveries=[{1: {"general": 4}, 2: {"general": 3}, 3: {"general": 5}}, {}],
            types=["truck", "truck"],
        )

        with pytest.raises(WarmStartError, match="capacity") as excinfo:
            encode_start(built, solution)

        assert excinfo.value.violations

    def test_incompatible_delivery(self, two_commodity_instance):
        """Test a regular vehicle cannot be encoded carrying chilled goods."""
        fleet = Fleet.stable(two_commodity_instance.vehicle_types, {"refrigerated": 1, "regular": 1})
        built = _build(two_commodity_instance, "stable", "vehicle", fleet)
        solution = RoutingSolution(
            routes=[[3], [1, 2]],
            deliveries=[{3: {"chilled": 2}}, {1: {"chilled": 3, "ambient": 2}, 2: {"ambient": 6}}],
            types=["refrigerated", "regular"],
        )

        with pytest.raises(WarmStartError, match="cannot carry"):
            encode_start(built, solution)
