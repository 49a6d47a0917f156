"""
Unit tests for telemetry module.
[CTX:PBI-0:0-5:TELEM]

Tests verify:
- Structured event creation with required fields
- JSON and key=value formatting
- Statistics collection per event kind
- Thread-safe recorder operations
- Per-run event history
"""
import json
import threading

from fleet_routing.core.telemetry import (
    EventKind,
    SolveEvent,
    TelemetryLevel,
    TelemetryRecorder,
    TelemetryStats,
    create_event,
    get_recorder,
    set_recorder,
)


# [CTX:PBI-0:0-5:TELEM] Test event creation and formatting
class TestSolveEvent:
    """Test SolveEvent data structure and serialization."""

    def test_event_to_dict(self):
        """Test event serialization to dictionary."""
        event = SolveEvent(
            timestamp="2026-01-15T09:05:00.123Z",
            run_id="inst-1/sc:full",
            source="bnb",
            kind="incumbent",
            wall_s=1.25,
            node=17,
            value=412.5,
            bound=398.0,
            detail={"depth": 4},
        )

        result = event.to_dict()

        assert result["run_id"] == "inst-1/sc:full"
        assert result["source"] == "bnb"
        assert result["kind"] == "incumbent"
        assert result["wall_s"] == 1.25
        assert result["node"] == 17
        assert result["value"] == 412.5
        assert result["bound"] == 398.0
        assert result["detail"] == {"depth": 4}

    def test_event_keeps_null_value_and_bound(self):
        """Test value and bound are emitted even when unknown."""
        event = SolveEvent(
            timestamp="2026-01-15T09:05:00Z",
            run_id="r",
            source="bnb",
            kind="root_lp",
            wall_s=0.1,
        )

        result = event.to_dict()

        assert "value" in result and result["value"] is None
        assert "bound" in result and result["bound"] is None

    def test_event_to_json(self):
        """Test event serialization to JSON string."""
        event = SolveEvent(
            timestamp="2026-01-15T09:05:00Z",
            run_id="r",
            source="lns",
            kind="heuristic",
            wall_s=3.0,
            value=100.0,
        )

        parsed = json.loads(event.to_json())

        assert parsed["source"] == "lns"
        assert parsed["kind"] == "heuristic"
        assert parsed["value"] == 100.0

    def test_event_to_keyvalue(self):
        """Test event serialization to key=value format."""
        event = SolveEvent(
            timestamp="2026-01-15T09:05:00Z",
            run_id="r",
            source="bnb",
            kind="lazy_cut",
            wall_s=0.5,
            detail={"rows": 3},
        )

        result = event.to_keyvalue()

        assert "kind=lazy_cut" in result
        assert "wall_s=0.5" in result
        # Nested dict should be flattened
        assert "detail.rows=3" in result


# [CTX:PBI-0:0-5:TELEM] Test recorder functionality
class TestTelemetryRecorder:
    """Test TelemetryRecorder logging and statistics."""

    def test_recorder_initialization(self):
        """Test recorder default initialization."""
        recorder = TelemetryRecorder()

        assert recorder.level == TelemetryLevel.INFO
        assert recorder.format_json is True
        assert recorder.collect_stats is False

    def test_stats_start_at_zero(self):
        """Test a fresh stats object is empty."""
        stats = TelemetryStats()

        assert stats.to_dict() == {
            "total_events": 0,
            "incumbents": 0,
            "lazy_cuts": 0,
            "timeouts": 0,
            "events_by_kind": {},
        }

    def test_recorder_collects_stats(self):
        """Test statistics count incumbents, cut rows and timeouts."""
        recorder = TelemetryRecorder(collect_stats=True)

        recorder.record(create_event("r", "bnb", EventKind.ROOT_LP, 0.1))
        recorder.record(create_event("r", "bnb", EventKind.INCUMBENT, 0.2, value=10.0))
        recorder.record(create_event("r", "bnb", EventKind.INCUMBENT, 0.3, value=9.0))
        recorder.record(create_event("r", "bnb", EventKind.LAZY_CUT, 0.4, detail={"rows": 4}))
        recorder.record(create_event("r", "bnb", EventKind.TIMEOUT, 0.5))

        stats = recorder.get_stats()

        assert stats.total_events == 5
        assert stats.incumbents == 2
        assert stats.lazy_cuts == 4
        assert stats.timeouts == 1
        assert stats.events_by_kind["incumbent"] == 2
        assert stats.events_by_kind["root_lp"] == 1

    def test_stats_disabled_by_default(self):
        """Test no statistics are kept without collect_stats."""
        recorder = TelemetryRecorder()

        recorder.record(create_event("r", "bnb", EventKind.INCUMBENT, 0.2, value=1.0))

        assert recorder.get_stats().total_events == 0
        assert len(recorder.get_events()) == 1

    def test_events_filtered_by_run(self):
        """Test get_events selects one run's stream."""
        recorder = TelemetryRecorder()

        recorder.record(create_event("a/sc:full", "bnb", EventKind.ROOT_LP, 0.1))
        recorder.record(create_event("b/sc:full", "bnb", EventKind.ROOT_LP, 0.1))
        recorder.record(create_event("a/sc:full", "bnb", EventKind.FINISHED, 0.9))

        events = recorder.get_events("a/sc:full")

        assert [e.kind for e in events] == ["root_lp", "finished"]
        assert len(recorder.get_events()) == 3

    def test_recorder_reset_stats(self):
        """Test statistics reset."""
        recorder = TelemetryRecorder(collect_stats=True)
        recorder.record(create_event("r", "bnb", EventKind.INCUMBENT, 0.1, value=1.0))

        assert recorder.get_stats().total_events == 1

        recorder.reset_stats()
        assert recorder.get_stats().total_events == 0

    def test_recorder_clear_events(self):
        """Test event history clearing."""
        recorder = TelemetryRecorder()
        recorder.record(create_event("r", "bnb", EventKind.FINISHED, 0.1))

        assert len(recorder.get_events()) == 1

        recorder.clear_events()
        assert len(recorder.get_events()) == 0

    def test_recorder_keyvalue_format(self, caplog):
        """Test key=value output reaches the log."""
        recorder = TelemetryRecorder(format_json=False)

        with caplog.at_level("INFO", logger="fleet_routing.core.telemetry"):
            recorder.record(create_event("r", "bnb", EventKind.FINISHED, 0.1))

        assert "kind=finished" in caplog.text

    def test_recorder_thread_safety(self):
        """Test concurrent recording from multiple threads."""
        recorder = TelemetryRecorder(collect_stats=True)

        def record_events(count: int):
            for i in range(count):
                recorder.record(create_event(f"run-{i}", "bnb", EventKind.BOUND, 0.0, bound=float(i)))

        threads = [threading.Thread(target=record_events, args=(10,)) for _ in range(10)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        assert recorder.get_stats().total_events == 100
        assert len(recorder.get_events()) == 100


# [CTX:PBI-0:0-5:TELEM] Test helper functions
class TestHelperFunctions:
    """Test module-level helper functions."""

    def test_create_event_with_timestamp(self):
        """Test create_event generates an ISO 8601 UTC timestamp."""
        event = create_event("r", "bnb", EventKind.ROOT_LP, 0.0)

        assert "T" in event.timestamp
        assert ("Z" in event.timestamp or "+00:00" in event.timestamp)

    def test_create_event_all_fields(self):
        """Test create_event with all optional fields."""
        event = create_event(
            "r", "bnb", EventKind.WARM_START, 2.5,
            node=3, value=50.0, bound=45.0, detail={"vehicles": 2},
        )

        assert event.kind == "warm_start"
        assert event.node == 3
        assert event.value == 50.0
        assert event.bound == 45.0
        assert event.detail == {"vehicles": 2}

    def test_create_event_default_detail(self):
        """Test detail defaults to an empty dict."""
        assert create_event("r", "bnb", EventKind.ROOT_LP, 0.0).detail == {}

    def test_get_recorder_singleton(self):
        """Test get_recorder returns singleton instance."""
        assert get_recorder() is get_recorder()

    def test_set_recorder_custom(self):
        """Test set_recorder allows custom instance."""
        custom_recorder = TelemetryRecorder(level=TelemetryLevel.DEBUG, format_json=False)

        set_recorder(custom_recorder)

        try:
            assert get_recorder() is custom_recorder
        finally:
            set_recorder(TelemetryRecorder())
