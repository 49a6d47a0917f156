"""
Injectable time sources and wall-clock budgets.
[CTX:PBI-0:0-3:CLOCK]

The branch-and-bound loop, the LNS and the warm-start sweep all run against a
time budget. They read time through a `TimeProvider` so tests can drive the
timeout paths with a `FakeTimeProvider` instead of sleeping.
"""
import threading
import time
from abc import ABC, abstractmethod
from typing import Optional


class TimeProvider(ABC):
    """Protocol for providing time values, allows injection of fake time in tests."""

    @abstractmethod
    def now(self) -> float:
        """Return the current time in seconds."""
        pass


class SystemTimeProvider(TimeProvider):
    """Real time provider backed by the monotonic clock."""

    def now(self) -> float:
        return time.monotonic()


class FakeTimeProvider(TimeProvider):
    """Fake time provider for deterministic tests."""

    def __init__(self, initial_time: float = 1000.0, tick: float = 0.0):
        """
        Args:
            initial_time: Starting clock value
            tick: Seconds added automatically after every `now()` call.
                  Lets a test simulate work without touching the code under test.
        """
        self._current_time = initial_time
        self._tick = tick
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            value = self._current_time
            self._current_time += self._tick
            return value

    def advance(self, seconds: float) -> None:
        """Advance time by given seconds."""
        with self._lock:
            self._current_time += seconds

    def set(self, time: float) -> None:
        """Set absolute time."""
        with self._lock:
            self._current_time = time


class Deadline:
    """
    A wall-clock budget measured against a `TimeProvider`.

    A budget of `None` never expires.
    """

    def __init__(self, budget_s: Optional[float], time_provider: Optional[TimeProvider] = None):
        self.time_provider = time_provider or SystemTimeProvider()
        self.budget_s = budget_s
        self.started = self.time_provider.now()

    def elapsed(self) -> float:
        """Seconds spent since the deadline was created."""
        return self.time_provider.now() - self.started

    def remaining(self) -> float:
        """Seconds left, `inf` for an unlimited budget, never negative."""
        if self.budget_s is None:
            return float("inf")
        return max(0.0, self.budget_s - self.elapsed())

    def expired(self) -> bool:
        if self.budget_s is None:
            return False
        return self.elapsed() >= self.budget_s
