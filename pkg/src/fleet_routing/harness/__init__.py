"""Experiment runner, reports and command-line front end."""

from fleet_routing.harness.bench import (
    BenchCell,
    BenchReport,
    BenchRow,
    Variant,
    VariantError,
    parse_variant,
    run_benchmark,
    run_benchmark_sync,
    solve_cell,
)
from fleet_routing.harness.report import ReportError, write_report, write_sweep_report
from fleet_routing.harness.sweep import SweepPoint, sweep_warmstart_budget

__all__ = [
    "BenchCell",
    "BenchReport",
    "BenchRow",
    "Variant",
    "VariantError",
    "parse_variant",
    "run_benchmark",
    "run_benchmark_sync",
    "solve_cell",
    "ReportError",
    "write_report",
    "write_sweep_report",
    "SweepPoint",
    "sweep_warmstart_budget",
]
