"""
Unit tests for max-flow delivery assignment.
[CTX:PBI-4:4-1:SOLUTION]
"""
from fleet_routing.delivery import assign_deliveries, shortfall_commodity

GENERAL = frozenset({"general"})
CHILLED_AMBIENT = frozenset({"chilled", "ambient"})
AMBIENT = frozenset({"ambient"})


class TestAssignDeliveries:
    """Test demand splitting over fixed visit sets."""

    def test_disjoint_visits(self, line_instance):
        """Test each customer is served in full by its only visitor."""
        deliveries = assign_deliveries(line_instance, [[1, 2], [3]], [10, 10], [GENERAL, GENERAL])

        assert deliveries == [{1: {"general": 4}, 2: {"general": 3}}, {3: {"general": 5}}]

    def test_split_delivery(self, split_instance):
        """Test one customer's 25 units are split over three trucks."""
        deliveries = assign_deliveries(split_instance, [[1], [1], [1]], [10, 10, 10], [GENERAL] * 3)

        loads = [sum(d[1].values()) for d in deliveries]
        assert sum(loads) == 25
        assert max(loads) <= 10

    def test_insufficient_capacity(self, line_instance):
        """Test None when the visiting vehicles cannot carry the demand."""
        assert assign_deliveries(line_instance, [[1, 2, 3], []], [10, 10], [GENERAL, GENERAL]) is None

    def test_unvisited_customer(self, line_instance):
        """Test None when a customer is visited by nobody."""
        assert assign_deliveries(line_instance, [[1], [2]], [10, 10], [GENERAL, GENERAL]) is None

    def test_compatibility(self, two_commodity_instance):
        """Test chilled goods only go to the refrigerated vehicle."""
        deliveries = assign_deliveries(
            two_commodity_instance, [[1, 3], [1, 2]], [10, 14], [CHILLED_AMBIENT, AMBIENT]
        )

        assert deliveries[0][1]["chilled"] == 3
        assert deliveries[0][3] == {"chilled": 2}
        assert "chilled" not in deliveries[1].get(1, {})
        assert deliveries[1][2] == {"ambient": 6}

    def test_integral_quantities(self, split_instance):
        deliveries = assign_deliveries(split_instance, [[1], [1], [1]], [9, 9, 9], [GENERAL] * 3)

        assert all(isinstance(q, int) for d in deliveries for per_k in d.values() for q in per_k.values())


class TestShortfallCommodity:
    def test_missing_refrigeration(self, two_commodity_instance):
        """Test chilled demand without refrigerated capacity is reported."""
        assert shortfall_commodity(two_commodity_instance, [14, 14], [AMBIENT, AMBIENT]) == "chilled"

    def test_enough(self, two_commodity_instance):
        assert shortfall_commodity(two_commodity_instance, [10, 14], [CHILLED_AMBIENT, AMBIENT]) is None
