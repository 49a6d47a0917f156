"""
Unit tests for gap arithmetic.
[CTX:PBI-3:3-4:GAP]
"""
import math

import pytest

from fleet_routing.solver.gap import compute_gap, format_percent, root_gap


class TestComputeGap:
    def test_relative_to_incumbent(self):
        """Test (incumbent - bound) / |incumbent|."""
        assert compute_gap(100.0, 90.0) == pytest.approx(0.1)

    def test_closed(self):
        """Test a bound above the incumbent counts as closed."""
        assert compute_gap(100.0, 100.0 + 1e-12) == 0.0

    def test_missing_bound(self):
        """Test a missing or infinite bound gives an infinite gap."""
        assert math.isinf(compute_gap(100.0, None))
        assert math.isinf(compute_gap(100.0, -math.inf))

    def test_zero_incumbent(self):
        """Test a zero incumbent divides by epsilon rather than zero."""
        assert compute_gap(0.0, 0.0) == 0.0


class TestRootGap:
    def test_relative_to_bound(self):
        """Test the root gap divides by the bound."""
        assert root_gap(110.0, 100.0) == pytest.approx(0.1)

    def test_weak_bound_exceeds_one(self):
        """Test a weak root bound yields a gap above 100%."""
        assert root_gap(30.0, 10.0) == pytest.approx(2.0)


class TestFormatPercent:
    def test_two_digits(self):
        assert format_percent(0.1234) == "12.34"
        assert format_percent(0.0) == "0.00"

    def test_infinite(self):
        assert format_percent(math.inf) == "inf"
