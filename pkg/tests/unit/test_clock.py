"""
Unit tests for time providers and deadlines.
[CTX:PBI-0:0-3:CLOCK]
"""
import math

from fleet_routing.core.clock import Deadline, FakeTimeProvider, SystemTimeProvider


class TestFakeTimeProvider:
    """Test the deterministic clock."""

    def test_advance_and_set(self):
        """Test manual control of the clock."""
        clock = FakeTimeProvider(initial_time=10.0)

        clock.advance(2.5)
        assert clock.now() == 12.5

        clock.set(100.0)
        assert clock.now() == 100.0

    def test_tick_advances_per_reading(self):
        """Test every reading moves the clock by the tick."""
        clock = FakeTimeProvider(initial_time=0.0, tick=0.5)

        assert [clock.now() for _ in range(3)] == [0.0, 0.5, 1.0]


class TestSystemTimeProvider:
    def test_monotonic(self):
        """Test readings never go backwards."""
        clock = SystemTimeProvider()
        first = clock.now()

        assert clock.now() >= first


class TestDeadline:
    """Test wall-clock budgets."""

    def test_expires_after_budget(self):
        """Test a deadline expires once its budget is spent."""
        clock = FakeTimeProvider(initial_time=0.0)
        deadline = Deadline(5.0, clock)

        clock.advance(3.0)
        assert not deadline.expired()
        assert deadline.remaining() == 2.0

        clock.advance(2.0)
        assert deadline.expired()
        assert deadline.remaining() == 0.0

    def test_remaining_never_negative(self):
        """Test overshooting the budget leaves zero remaining."""
        clock = FakeTimeProvider(initial_time=0.0)
        deadline = Deadline(1.0, clock)

        clock.advance(10.0)

        assert deadline.remaining() == 0.0
        assert deadline.elapsed() == 10.0

    def test_unlimited_budget(self):
        """Test a None budget never expires."""
        clock = FakeTimeProvider(initial_time=0.0)
        deadline = Deadline(None, clock)

        clock.advance(1e9)

        assert not deadline.expired()
        assert math.isinf(deadline.remaining())
