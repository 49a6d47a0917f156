"""
Structured telemetry for solver, heuristic and harness runs.
[CTX:PBI-0:0-5:TELEM]

This module provides structured logging capabilities for understanding:
- when the root relaxation finished and what it proved
- every incumbent and best-bound improvement of a branch-and-bound run
- lazy sub-tour cuts and warm-start injections
- heuristic improvements during the LNS phase

The event stream of one run doubles as its machine-readable solve log.
"""
import json
import logging
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional

logger = logging.getLogger(__name__)


class TelemetryLevel(Enum):
    """Telemetry verbosity levels."""
    INFO = "info"
    DEBUG = "debug"


class EventKind(Enum):
    """Solve-log event types."""
    ROOT_LP = "root_lp"          # root relaxation solved
    INCUMBENT = "incumbent"      # new best integer solution
    BOUND = "bound"              # best bound moved up
    LAZY_CUT = "lazy_cut"        # sub-tour rows added
    WARM_START = "warm_start"    # starting solution injected
    HEURISTIC = "heuristic"      # LNS improvement
    TIMEOUT = "timeout"          # budget exhausted
    FINISHED = "finished"        # run finished


# Kinds worth an INFO line; everything else goes to DEBUG
_INFO_KINDS = {
    EventKind.INCUMBENT.value,
    EventKind.WARM_START.value,
    EventKind.TIMEOUT.value,
    EventKind.FINISHED.value,
}


# [CTX:PBI-0:0-5:TELEM] Telemetry event structure
@dataclass
class SolveEvent:
    """
    A single telemetry event of a solve or heuristic run.

    Attributes:
        timestamp: ISO 8601 timestamp of event
        run_id: Identifier of the run (instance/variant)
        source: Emitting component ("bnb", "lns", "sweep", ...)
        kind: Event kind (see EventKind)
        wall_s: Seconds since the run started
        node: Branch-and-bound node count when the event fired
        value: Incumbent objective (if any)
        bound: Best proven bound (if any)
        detail: Free-form extra fields
    """
    timestamp: str
    run_id: str
    source: str
    kind: str
    wall_s: float
    node: int = 0
    value: Optional[float] = None
    bound: Optional[float] = None
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert event to dictionary for logging."""
        return {k: v for k, v in asdict(self).items() if v is not None or k in ("value", "bound")}

    def to_json(self) -> str:
        """Convert event to JSON string."""
        return json.dumps(self.to_dict(), default=str)

    def to_keyvalue(self) -> str:
        """Convert event to key=value format."""
        pairs = []
        for key, value in self.to_dict().items():
            if isinstance(value, dict):
                for subkey, subval in value.items():
                    pairs.append(f"{key}.{subkey}={subval}")
            else:
                pairs.append(f"{key}={value}")
        return " ".join(pairs)


# [CTX:PBI-0:0-5:TELEM] In-memory statistics tracker
@dataclass
class TelemetryStats:
    """
    Aggregated statistics for telemetry analysis.

    Useful for tests and runtime monitoring.
    """
    total_events: int = 0
    incumbents: int = 0
    lazy_cuts: int = 0
    timeouts: int = 0
    events_by_kind: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert stats to dictionary."""
        return {
            "total_events": self.total_events,
            "incumbents": self.incumbents,
            "lazy_cuts": self.lazy_cuts,
            "timeouts": self.timeouts,
            "events_by_kind": self.events_by_kind,
        }


# [CTX:PBI-0:0-5:TELEM] Main telemetry recorder
class TelemetryRecorder:
    """
    Records and emits structured telemetry for solver runs.

    Features:
    - Structured logging in JSON or key=value format
    - Configurable verbosity (info/debug)
    - Optional in-memory statistics collection
    - Thread-safe operation, so concurrent benchmark cells can share it
    """

    def __init__(
        self,
        level: TelemetryLevel = TelemetryLevel.INFO,
        format_json: bool = True,
        collect_stats: bool = False
    ):
        """
        Initialize telemetry recorder.

        Args:
            level: Logging verbosity level
            format_json: If True, log as JSON; otherwise use key=value
            collect_stats: If True, collect in-memory statistics
        """
        self.level = level
        self.format_json = format_json
        self.collect_stats = collect_stats

        self._stats = TelemetryStats()
        self._stats_lock = threading.Lock()

        self._events: List[SolveEvent] = []
        self._events_lock = threading.Lock()

    def record(self, event: SolveEvent) -> None:
        """
        Record a telemetry event.

        Args:
            event: Event to record
        """
        if self.format_json:
            log_message = f"[CTX:PBI-0:0-5:TELEM] {event.to_json()}"
        else:
            log_message = f"[CTX:PBI-0:0-5:TELEM] {event.to_keyvalue()}"

        if self.level == TelemetryLevel.DEBUG:
            logger.debug(log_message)
        elif event.kind in _INFO_KINDS:
            logger.info(log_message)
        else:
            logger.debug(log_message)

        if self.collect_stats:
            with self._stats_lock:
                self._stats.total_events += 1
                self._stats.events_by_kind[event.kind] = (
                    self._stats.events_by_kind.get(event.kind, 0) + 1
                )
                if event.kind == EventKind.INCUMBENT.value:
                    self._stats.incumbents += 1
                elif event.kind == EventKind.LAZY_CUT.value:
                    self._stats.lazy_cuts += int(event.detail.get("rows", 1))
                elif event.kind == EventKind.TIMEOUT.value:
                    self._stats.timeouts += 1

        with self._events_lock:
            self._events.append(event)

    def get_stats(self) -> TelemetryStats:
        """Get current statistics snapshot."""
        with self._stats_lock:
            return TelemetryStats(
                total_events=self._stats.total_events,
                incumbents=self._stats.incumbents,
                lazy_cuts=self._stats.lazy_cuts,
                timeouts=self._stats.timeouts,
                events_by_kind=self._stats.events_by_kind.copy(),
            )

    def reset_stats(self) -> None:
        """Reset statistics."""
        with self._stats_lock:
            self._stats = TelemetryStats()

    def get_events(self, run_id: Optional[str] = None) -> List[SolveEvent]:
        """Get recorded events, optionally only those of one run."""
        with self._events_lock:
            if run_id is None:
                return self._events.copy()
            return [e for e in self._events if e.run_id == run_id]

    def clear_events(self) -> None:
        """Clear event history."""
        with self._events_lock:
            self._events.clear()


# [CTX:PBI-0:0-5:TELEM] Global telemetry recorder instance
_global_recorder: Optional[TelemetryRecorder] = None
_recorder_lock = threading.Lock()


def get_recorder() -> TelemetryRecorder:
    """
    Get the global telemetry recorder instance.

    Creates a default recorder if none exists.
    """
    global _global_recorder

    if _global_recorder is None:
        with _recorder_lock:
            if _global_recorder is None:
                _global_recorder = TelemetryRecorder()

    return _global_recorder


def set_recorder(recorder: TelemetryRecorder) -> None:
    """
    Set the global telemetry recorder instance.

    Args:
        recorder: Recorder instance to use globally
    """
    global _global_recorder

    with _recorder_lock:
        _global_recorder = recorder


def create_event(
    run_id: str,
    source: str,
    kind: EventKind,
    wall_s: float,
    node: int = 0,
    value: Optional[float] = None,
    bound: Optional[float] = None,
    detail: Optional[Dict[str, Any]] = None,
) -> SolveEvent:
    """
    Helper to create a telemetry event with current timestamp.

    Args:
        run_id: Identifier of the run
        source: Emitting component
        kind: Event kind
        wall_s: Seconds since the run started
        node: Node count at emission
        value: Incumbent objective
        bound: Best bound
        detail: Extra fields

    Returns:
        SolveEvent ready for recording
    """
    return SolveEvent(
        timestamp=datetime.now(timezone.utc).isoformat(),
        run_id=run_id,
        source=source,
        kind=kind.value,
        wall_s=wall_s,
        node=node,
        value=value,
        bound=bound,
        detail=detail or {},
    )
