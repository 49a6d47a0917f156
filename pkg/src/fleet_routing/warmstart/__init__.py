"""Heuristic starting solutions: routing solutions, construction, LNS and encoding."""

from fleet_routing.warmstart.solution import (
    RoutingSolution,
    SolutionFormatError,
    solution_from_document,
)

__all__ = ["RoutingSolution", "SolutionFormatError", "solution_from_document"]
