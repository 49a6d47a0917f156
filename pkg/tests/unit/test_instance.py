"""
Unit tests for instances, fleets, documents, aggregation and generation.
[CTX:PBI-1:1-1:INSTANCE]
"""
import json

import pytest

from fleet_routing.instance import (
    Fleet,
    FleetMode,
    FleetSizingError,
    InstanceValidationError,
    aggregate_customers,
    ORACLE_MAX_VEHICLES,
    commodity_roles,
    euclidean_matrix,
    fleet_from_document,
    generate_instance,
    instance_to_document,
    load_instance,
    radius_for_cluster_count,
    save_instance,
    size_flexible_fleet,
    size_stable_fleet,
)
from fleet_routing.formulations import resolve_fleet
from tests.conftest import REFRIGERATED, REGULAR, make_instance


def _document(**overrides):
    document = {
        "name": "doc",
        "depot": {"x": 0, "y": 0},
        "commodities": ["general"],
        "vehicle_types": [{"id": "truck", "capacity": 10, "cost_per_km": 1.0, "compatible": ["general"]}],
        "customers": [
            {"id": 1, "x": 3, "y": 0, "demand": {"general": 4}},
            {"id": 2, "x": 0, "y": 4, "demand": {"general": 2}},
        ],
    }
    document.update(overrides)
    return document


class TestDistances:
    """Test the Euclidean distance matrix."""

    def test_pythagorean_distances(self):
        matrix = euclidean_matrix([(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)])

        assert matrix == ((0.0, 3.0, 4.0), (3.0, 0.0, 5.0), (4.0, 5.0, 0.0))
        assert all(isinstance(d, float) for row in matrix for d in row)

    def test_symmetric_with_zero_diagonal(self):
        """Test irrational distances stay exactly symmetric."""
        points = [(50.0, 50.0), (12.3, 77.7), (91.1, 4.2), (33.3, 66.6)]
        matrix = euclidean_matrix(points)

        for a in range(len(points)):
            assert matrix[a][a] == 0.0
            for b in range(len(points)):
                assert matrix[a][b] == matrix[b][a]
        assert matrix[1][2] == pytest.approx(((12.3 - 91.1) ** 2 + (77.7 - 4.2) ** 2) ** 0.5)

    def test_empty(self):
        assert euclidean_matrix([]) == ()


class TestInstance:
    """Test location lookup and demand accessors."""

    def test_distances_by_location_id(self, line_instance):
        """Test distances are looked up by id, the depot being 0."""
        assert line_instance.distance(0, 1) == pytest.approx(3.0)
        assert line_instance.distance(1, 2) == pytest.approx(3.0)
        assert line_instance.distance(1, 3) == pytest.approx(5.0)
        assert line_instance.distance(3, 0) == pytest.approx(4.0)

    def test_total_demand(self, line_instance):
        """Test totals per commodity and overall."""
        assert line_instance.total_demand("general") == 12
        assert line_instance.total_demand() == 12

    def test_unknown_location(self, line_instance):
        """Test an unknown id raises."""
        with pytest.raises(InstanceValidationError, match="Unknown location id"):
            line_instance.position(99)

    def test_dist_array_read_only(self, line_instance):
        """Test the numpy view cannot be written."""
        with pytest.raises(ValueError):
            line_instance.dist_array[0, 1] = 1.0

    def test_with_customer_order_keeps_distances(self, line_instance):
        """Test reordering customers moves distance rows along."""
        reordered = line_instance.with_customer_order([3, 1, 2])

        assert reordered.customer_ids == [3, 1, 2]
        assert reordered.position(3) == 1
        assert reordered.distance(3, 1) == pytest.approx(5.0)
        assert reordered.distance(0, 2) == pytest.approx(6.0)

    def test_with_customer_order_rejects_non_permutation(self, line_instance):
        """Test a partial order is refused."""
        with pytest.raises(InstanceValidationError, match="permutation"):
            line_instance.with_customer_order([1, 2])


class TestValidation:
    """Test instance invariants."""

    def test_negative_demand(self):
        """Test a negative demand is rejected."""
        with pytest.raises(InstanceValidationError, match="negative"):
            make_instance([(1, 1.0, 0.0, {"general": -1})])

    def test_zero_total_demand(self):
        """Test a customer must demand something."""
        with pytest.raises(InstanceValidationError, match="zero total demand"):
            make_instance([(1, 1.0, 0.0, {"general": 0})])

    def test_demand_without_compatible_type(self):
        """Test a demanded commodity needs a compatible type."""
        with pytest.raises(InstanceValidationError, match="no compatible vehicle type"):
            make_instance(
                [(1, 1.0, 0.0, {"chilled": 2, "ambient": 0})],
                commodities=("chilled", "ambient"),
                types=(REGULAR,),
            )

    def test_asymmetric_matrix(self):
        """Test an asymmetric distance matrix is rejected."""
        document = _document(dist=[[0, 1, 2], [1, 0, 3], [2, 4, 0]])

        with pytest.raises(InstanceValidationError, match="symmetric"):
            load_instance(document)

    def test_duplicate_customer_ids(self):
        """Test customer ids are unique."""
        with pytest.raises(InstanceValidationError, match="Duplicate customer id"):
            make_instance([
                (1, 1.0, 0.0, {"general": 1}),
                (1, 2.0, 0.0, {"general": 1}),
            ])


class TestDocuments:
    """Test JSON document loading and saving."""

    def test_load_computes_euclidean_distances(self):
        """Test a document without a matrix gets Euclidean distances."""
        inst = load_instance(_document())

        assert inst.name == "doc"
        assert inst.distance(1, 2) == pytest.approx(5.0)
        assert inst.customer(2).dem("general") == 2

    def test_load_fills_missing_commodities(self):
        """Test unspecified commodities default to zero demand."""
        document = _document(
            commodities=["general", "chilled"],
            vehicle_types=[{"id": "truck", "capacity": 10, "cost_per_km": 1.0, "compatible": ["general", "chilled"]}],
        )

        inst = load_instance(document)

        assert inst.customer(1).demand == {"general": 4, "chilled": 0}

    def test_load_invalid_json(self):
        """Test malformed JSON raises a validation error."""
        with pytest.raises(InstanceValidationError, match="Invalid JSON"):
            load_instance("{not json")

    def test_load_missing_key(self):
        """Test a missing top-level key is reported."""
        document = _document()
        del document["customers"]

        with pytest.raises(InstanceValidationError, match="missing 'customers'"):
            load_instance(document)

    def test_load_non_integer_demand(self):
        """Test fractional demands are rejected."""
        document = _document(customers=[{"id": 1, "x": 1, "y": 1, "demand": {"general": 1.5}}])

        with pytest.raises(InstanceValidationError, match="must be an integer"):
            load_instance(document)

    def test_save_then_load(self, two_commodity_instance):
        """Test a saved instance loads back equal."""
        again = load_instance(save_instance(two_commodity_instance))

        assert again == two_commodity_instance

    def test_document_lists_compatible_in_commodity_order(self, two_commodity_instance):
        """Test compatible lists follow the declared commodity order."""
        document = instance_to_document(two_commodity_instance)

        refrigerated = document["vehicle_types"][0]
        assert refrigerated["compatible"] == ["chilled", "ambient"]
        assert json.loads(json.dumps(document)) == document

    def test_fleet_block_is_validated(self):
        """Test an invalid fleet block fails at load time."""
        with pytest.raises(InstanceValidationError, match="Unknown fleet mode"):
            load_instance(_document(fleet={"mode": "rental", "counts": 2}))


class TestFleet:
    """Test fleet construction and sizing."""

    def test_stable_pools_refrigerated_first(self):
        """Test the most versatile type gets the first pool."""
        fleet = Fleet.stable((REGULAR, REFRIGERATED), {"regular": 1, "refrigerated": 2})

        assert fleet.mode is FleetMode.STABLE
        assert [v.type_id for v in fleet.vehicles] == ["refrigerated", "refrigerated", "regular"]
        assert [v.index for v in fleet.pool_firsts()] == [0, 2]
        assert fleet.cap_max == 14
        assert fleet.cap_min == 10
        assert fleet.total_capacity("chilled") == 20
        assert fleet.total_capacity() == 34

    def test_stable_unknown_type(self):
        """Test counts for an undeclared type are refused."""
        with pytest.raises(FleetSizingError, match="unknown vehicle types"):
            Fleet.stable((REGULAR,), {"tanker": 1})

    def test_flexible_fleet(self):
        """Test untyped vehicles may carry any commodity."""
        fleet = Fleet.flexible((REFRIGERATED, REGULAR), 3)

        assert fleet.size == 3
        assert all(v.type_id is None for v in fleet.vehicles)
        assert fleet.vehicles[0].compatible == frozenset({"chilled", "ambient"})
        assert fleet.total_capacity("chilled") == 30
        assert fleet.total_capacity() == 42

    def test_fleet_from_document(self, line_instance):
        """Test both fleet block modes."""
        flexible = fleet_from_document(line_instance, {"mode": "flexible", "counts": 3})
        stable = fleet_from_document(line_instance, {"mode": "stable", "counts": {"truck": 2}})

        assert flexible.size == 3
        assert stable.pools == {"truck": 2}
        assert fleet_from_document(line_instance) is None

    def test_fleet_document_round_trip(self, line_stable_fleet, line_instance):
        """Test to_document feeds fleet_from_document."""
        again = fleet_from_document(line_instance, line_stable_fleet.to_document())

        assert again == line_stable_fleet

    def test_commodity_roles_pick_cheapest(self, two_commodity_instance):
        """Test each commodity goes to its cheapest compatible type."""
        assert commodity_roles(two_commodity_instance) == {
            "chilled": "refrigerated",
            "ambient": "regular",
        }

    def test_size_stable_fleet(self, two_commodity_instance):
        """Test pools are ceil(assigned demand / capacity) plus slack."""
        fleet = size_stable_fleet(two_commodity_instance)

        assert fleet.pools == {"refrigerated": 2, "regular": 2}

    def test_size_stable_fleet_without_slack(self, line_instance):
        """Test zero slack gives the bare ceiling."""
        assert size_stable_fleet(line_instance, slack=0).pools == {"truck": 2}

    def test_size_stable_fleet_incompatible_role(self, two_commodity_instance):
        """Test assigning chilled goods to the regular type fails."""
        with pytest.raises(FleetSizingError, match="incompatible"):
            size_stable_fleet(two_commodity_instance, roles={"chilled": "regular", "ambient": "regular"})

    def test_size_flexible_fleet(self, two_commodity_instance, line_instance):
        """Test |V| is total demand over the smallest capacity, rounded up."""
        assert size_flexible_fleet(two_commodity_instance) == 2
        assert size_flexible_fleet(line_instance) == 2


class TestAggregation:
    """Test customer clustering."""

    def test_zero_radius_is_identity(self, line_instance):
        """Test radius 0 returns the instance unchanged."""
        assert aggregate_customers(line_instance, 0.0) is line_instance

    def test_cluster_merges_neighbours(self, line_instance):
        """Test nearby customers merge at the demand-weighted centroid."""
        merged = aggregate_customers(line_instance, 3.5)

        assert merged.customer_ids == [2, 3]
        cluster = merged.customer(2)
        assert cluster.dem("general") == 7
        assert cluster.x == pytest.approx(30.0 / 7.0)
        assert merged.total_demand("general") == line_instance.total_demand("general")

    def test_negative_radius(self, line_instance):
        """Test a negative radius is refused."""
        with pytest.raises(InstanceValidationError):
            aggregate_customers(line_instance, -1.0)

    def test_radius_for_cluster_count(self):
        """Test the bisected radius reaches the target count."""
        inst = generate_instance(3, 12, 1, "single-type")

        radius = radius_for_cluster_count(inst, 6)

        assert aggregate_customers(inst, radius).n_customers <= 6
        assert radius_for_cluster_count(inst, 12) == 0.0


class TestGeneration:
    """Test the seeded generator."""

    def test_same_seed_same_instance(self):
        """Test generation is deterministic per seed."""
        assert generate_instance(7, 8) == generate_instance(7, 8)
        assert generate_instance(7, 8) != generate_instance(8, 8)

    def test_split_heavy_needs_splits(self):
        """Test split-heavy instances contain a customer above every capacity."""
        inst = generate_instance(1, 5, 2, "split-heavy")
        cap_max = max(vt.capacity for vt in inst.vehicle_types)

        assert any(c.total_demand > cap_max for c in inst.customers)

    def test_standard_profile_types(self):
        """Test two commodities give a refrigerated and a regular type."""
        inst = generate_instance(2, 4, 2)

        assert [vt.id for vt in inst.vehicle_types] == ["refrigerated", "regular"]
        assert inst.vehicle_type("regular").compatible == frozenset({"ambient"})

    def test_rejects_empty(self):
        """Test at least one customer is required."""
        with pytest.raises(InstanceValidationError):
            generate_instance(1, 0)

    def test_unknown_profile(self):
        """Test an unknown profile name is refused."""
        with pytest.raises(InstanceValidationError, match="Unknown generator profile"):
            generate_instance(1, 3, 2, "huge")

    @pytest.mark.parametrize("seed", range(6))
    def test_oracle_profile_fleet_fits_the_oracle(self, seed):
        """Test oracle instances carry a Stable fleet the exhaustive oracle accepts."""
        inst = generate_instance(seed, 5, 2, "oracle")

        fleet = resolve_fleet(inst, FleetMode.STABLE)

        assert inst.fleet_spec["mode"] == "stable"
        assert fleet.size == ORACLE_MAX_VEHICLES
        assert fleet.total_capacity() >= inst.total_demand()
        assert resolve_fleet(inst, FleetMode.FLEXIBLE).size <= ORACLE_MAX_VEHICLES

    def test_other_profiles_have_no_fleet_block(self):
        assert generate_instance(3, 5).fleet_spec is None
