"""
Unit tests for the four model builders and solution decoding.
[CTX:PBI-2:2-2:FORMULATIONS]
"""
from dataclasses import replace

import pytest

from fleet_routing.formulations import (
    BuildOptions,
    DecodeError,
    RoutingKind,
    arcs,
    build_model,
    check_capacity,
    decode_solution,
    kind_code,
    parse_kind,
    resolve_fleet,
    values_of,
)
from fleet_routing.instance import Fleet, FleetMode
from fleet_routing.mip import ModelBuildError, ModelFrozenError, VarKind


def _route_values(built, routes, deliveries, types=None):
    """Assignment with every variable at zero except the given routes and deliveries."""
    catalog = built.catalog
    values = {var.id: 0.0 for var in built.model.variables}
    for v, route in enumerate(routes):
        stops = [0, *route, 0] if route else []
        t = types[v] if types else None
        for a, b in zip(stops, stops[1:]):
            values[catalog.x_var(v, a, b, t)] = 1.0
        values[catalog.u[v]] = 0.0 if route else 1.0
        if types and route:
            values[catalog.z[(v, t)]] = 1.0
    for (v, i, k), qty in deliveries.items():
        values[catalog.y[(v, i, k)]] = float(qty)
    return values


class TestKinds:
    """Test kind parsing."""

    def test_parse_kind(self):
        """Test codes, case and aliases."""
        assert parse_kind("SC") == (FleetMode.STABLE, RoutingKind.COMMODITY)
        assert parse_kind("ff") == (FleetMode.FLEXIBLE, RoutingKind.VEHICLE)
        assert parse_kind("sf") == parse_kind("sv")
        assert parse_kind("fv") == parse_kind("ff")

    def test_unknown_kind(self):
        """Test an unknown code raises a build error."""
        with pytest.raises(ModelBuildError, match="Unknown model kind"):
            parse_kind("xx")

    def test_kind_code(self):
        """Test the inverse mapping."""
        assert kind_code(FleetMode.FLEXIBLE, RoutingKind.COMMODITY) == "fc"
        assert kind_code("stable", "vehicle") == "sv"

    def test_arcs_complete_without_loops(self, line_instance):
        """Test E is the complete digraph on depot and customers."""
        edge_set = arcs(line_instance)

        assert len(edge_set) == 12
        assert (0, 1) in edge_set and (1, 0) in edge_set
        assert all(i != j for i, j in edge_set)


class TestFleetResolution:
    """Test fleet sizing and capacity checks at build time."""

    def test_default_stable_sizing(self, line_instance):
        """Test Stable pools are sized with one slack vehicle."""
        built = build_model(line_instance, "stable", "vehicle")

        assert built.fleet.pools == {"truck": 3}

    def test_default_flexible_sizing(self, line_instance):
        """Test Flexible fleets get ceil(demand / cap_min) vehicles."""
        assert resolve_fleet(line_instance, FleetMode.FLEXIBLE).size == 2

    def test_instance_fleet_block_wins_over_sizing(self, line_instance):
        """Test a documented Stable fleet is used when no fleet is passed."""
        inst = replace(line_instance, fleet_spec={"mode": "stable", "counts": {"truck": 2}})

        assert resolve_fleet(inst, FleetMode.STABLE).pools == {"truck": 2}
        assert resolve_fleet(inst, FleetMode.FLEXIBLE).size == 2

    def test_mode_mismatch(self, line_instance, line_flexible_fleet):
        """Test a Flexible fleet cannot back a Stable model."""
        with pytest.raises(ModelBuildError, match="does not match"):
            build_model(line_instance, "stable", "commodity", fleet=line_flexible_fleet)

    def test_total_shortfall(self, line_instance):
        """Test a fleet too small for the total demand is rejected."""
        fleet = Fleet.stable(line_instance.vehicle_types, {"truck": 1})

        with pytest.raises(ModelBuildError, match="Infeasible by construction"):
            check_capacity(line_instance, fleet)

    def test_commodity_shortfall(self, two_commodity_instance):
        """Test chilled demand without refrigerated vehicles is rejected."""
        fleet = Fleet.stable(two_commodity_instance.vehicle_types, {"regular": 2})

        with pytest.raises(ModelBuildError, match="chilled"):
            build_model(two_commodity_instance, "stable", "vehicle", fleet=fleet)


class TestStableModels:
    """Test variable and row counts of SC and SV."""

    def test_commodity_flow_counts(self, line_instance, line_stable_fleet):
        """Test SC declares x, y, u and f with the expected rows."""
        built = build_model(line_instance, "stable", "commodity", fleet=line_stable_fleet)

        assert built.code == "sc"
        assert not built.is_vehicle_flow
        assert built.catalog.counts() == {"x": 24, "y": 6, "u": 2, "z": 0, "f": 24}
        assert built.model.tag_counts() == {
            "demand": 3,
            "capacity": 2,
            "usage": 2,
            "visited": 6,
            "balance": 8,
            "flow_balance": 6,
            "carry": 24,
        }
        assert built.model.lazy_hooks == ()
        assert built.model.frozen

    def test_vehicle_flow_counts(self, line_instance, line_stable_fleet):
        """Test SV drops f and registers the sub-tour hook."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)

        assert built.catalog.counts() == {"x": 24, "y": 6, "u": 2, "z": 0, "f": 0}
        assert sum(built.model.tag_counts().values()) == 21
        assert len(built.model.lazy_hooks) == 1

    def test_incompatible_y_absent(self, two_commodity_instance):
        """Test regular vehicles get no chilled delivery variables."""
        fleet = Fleet.stable(two_commodity_instance.vehicle_types, {"refrigerated": 1, "regular": 1})

        built = build_model(two_commodity_instance, "stable", "commodity", fleet=fleet)

        assert (0, 1, "chilled") in built.catalog.y
        assert (1, 1, "chilled") not in built.catalog.y
        assert (1, 1, "ambient") in built.catalog.y
        assert not any(key[1] == "chilled" for key in built.catalog.f if key[0] == 1)

    def test_priorities(self, line_instance, line_stable_fleet):
        """Test usage variables outrank arcs."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)
        model, catalog = built.model, built.catalog

        assert model.variable(catalog.u[0]).priority == 100
        assert model.variable(catalog.x[(0, 0, 1)]).priority == 0
        assert model.variable(catalog.y[(0, 1, "general")]).kind is VarKind.CONTINUOUS

    def test_custom_priorities(self, line_instance, line_stable_fleet):
        """Test BuildOptions priorities reach the variables."""
        options = BuildOptions(priorities={"usage": 1, "type": 2, "arc": 3})

        built = build_model(line_instance, "stable", "vehicle", options=options, fleet=line_stable_fleet)

        assert built.model.variable(built.catalog.x[(1, 2, 3)]).priority == 3

    def test_arc_costs(self, two_commodity_instance):
        """Test x objective is cost_per_km times distance."""
        fleet = Fleet.stable(two_commodity_instance.vehicle_types, {"refrigerated": 1, "regular": 1})

        built = build_model(two_commodity_instance, "stable", "vehicle", fleet=fleet)

        assert built.model.variable(built.catalog.x[(0, 0, 1)]).obj == pytest.approx(1.5 * 4.0)
        assert built.model.variable(built.catalog.x[(1, 0, 1)]).obj == pytest.approx(4.0)

    def test_frozen_after_build(self, line_instance, line_stable_fleet):
        """Test the returned model cannot be extended."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)

        with pytest.raises(ModelFrozenError):
            built.model.add_variable()


class TestFlexibleModels:
    """Test FC and FF."""

    def test_vehicle_flow_counts(self, line_instance, line_flexible_fleet):
        """Test FF declares typed arcs and type choices."""
        built = build_model(line_instance, "flexible", "vehicle", fleet=line_flexible_fleet)

        assert built.code == "ff"
        assert built.catalog.counts() == {"x": 24, "y": 6, "u": 2, "z": 2, "f": 0}
        counts = built.model.tag_counts()
        assert counts["type_choice"] == 2
        assert counts["compatibility"] == 2
        assert counts["capacity"] == 2
        assert counts["type_edges"] == 2
        assert counts["balance"] == 8

    def test_typed_arc_layers(self, two_commodity_instance):
        """Test every vehicle has one arc layer per type."""
        fleet = Fleet.flexible(two_commodity_instance.vehicle_types, 2)

        built = build_model(two_commodity_instance, "flexible", "commodity", fleet=fleet)

        assert built.catalog.counts()["x"] == 2 * 2 * 12
        assert built.catalog.x_var(0, 0, 1, "regular") == built.catalog.x[(0, "regular", 0, 1)]
        assert built.vehicle_capacity(0) == 14

    def test_y_bounded_by_largest_capacity(self, two_commodity_instance):
        """Test Flexible deliveries are bounded by cap_max."""
        fleet = Fleet.flexible(two_commodity_instance.vehicle_types, 2)

        built = build_model(two_commodity_instance, "flexible", "vehicle", fleet=fleet)

        assert built.model.variable(built.catalog.y[(0, 2, "ambient")]).upper == 14


class TestDecode:
    """Test routes rebuilt from assignments."""

    def test_decode_stable(self, line_instance, line_stable_fleet):
        """Test arcs and deliveries come back as routes with their cost."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)
        values = _route_values(
            built, [[1, 2], [3]],
            {(0, 1, "general"): 4, (0, 2, "general"): 3, (1, 3, "general"): 5},
        )

        assert built.model.check_assignment(values) == []
        solution = decode_solution(built, values)

        assert solution.routes == [[1, 2], [3]]
        assert solution.deliveries[1] == {3: {"general": 5}}
        assert solution.types == ["truck", "truck"]
        assert solution.objective == pytest.approx(20.0)

    def test_decode_uncoverable_routes(self, line_instance, line_flexible_fleet):
        """Test one truck visiting every customer cannot cover 12 units."""
        built = build_model(line_instance, "flexible", "vehicle", fleet=line_flexible_fleet)
        values = _route_values(
            built, [[1, 2, 3], []],
            {(0, 1, "general"): 4, (0, 2, "general"): 3, (0, 3, "general"): 5},
            types=["truck", None],
        )

        with pytest.raises(DecodeError, match="cannot cover"):
            decode_solution(built, values)

    def test_decode_subtour(self, line_instance, line_stable_fleet):
        """Test a depot-free cycle in a vehicle-flow point is an error."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)
        values = _route_values(built, [[3], []], {})
        values[built.catalog.x[(1, 1, 2)]] = 1.0
        values[built.catalog.x[(1, 2, 1)]] = 1.0

        with pytest.raises(DecodeError, match="depot-free cycle"):
            decode_solution(built, values)

    def test_decode_open_route(self, line_instance, line_stable_fleet):
        """Test arcs that do not close are an error."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)
        values = _route_values(built, [[], []], {})
        values[built.catalog.x[(0, 0, 1)]] = 1.0

        with pytest.raises(DecodeError, match="closed routes"):
            decode_solution(built, values)

    def test_values_of(self, line_instance, line_stable_fleet):
        """Test symbol values are listed by subscripts."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)
        values = _route_values(built, [[1, 2, 3], []], {})

        assert dict(values_of(built, values, "u")) == {(0,): 0.0, (1,): 1.0}

    def test_lp_export_names_rows(self, line_instance, line_stable_fleet):
        """Test the LP text carries row tags."""
        built = build_model(line_instance, "stable", "vehicle", fleet=line_stable_fleet)

        text = built.to_lp_text()

        assert "\\ demand[i=1,k=general]" in text
        assert "\\ v0 = x[0,0,1]" in text
