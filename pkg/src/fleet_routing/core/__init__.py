"""Core substrate: configuration, telemetry, clocks and instance sources."""

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.core.source import InstanceSource, NamedInstance

__all__ = ["FleetRoutingError", "InstanceSource", "NamedInstance"]
