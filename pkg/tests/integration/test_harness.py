"""
Integration tests for warm-started cells, budget sweeps and the solve command.
[CTX:PBI-5:5-1:BENCH]
"""
import json
import math

import pytest

from fleet_routing.checker import validate_solution
from fleet_routing.core.clock import FakeTimeProvider
from fleet_routing.core.source import NamedInstance
from fleet_routing.core.telemetry import EventKind
from fleet_routing.harness.bench import parse_variant, solve_cell
from fleet_routing.harness.cli import EXIT_OK, main
from fleet_routing.harness.sweep import sweep_warmstart_budget
from fleet_routing.instance import save_instance
from fleet_routing.solver import MIPStatus, SolveParams
from fleet_routing.warmstart.solution import solution_from_document
from tests.conftest import make_instance


def _clock() -> FakeTimeProvider:
    return FakeTimeProvider(initial_time=0.0, tick=0.001)


@pytest.fixture
def named_line(line_instance, line_stable_fleet):
    return NamedInstance("line", line_instance, fleet=line_stable_fleet)


class TestSolveCell:
    """Test one benchmark cell end to end."""

    def test_cold(self, named_line):
        cell = solve_cell(named_line, parse_variant("sv:base"), SolveParams(time_limit_s=60.0), clock=_clock())

        assert cell.status is MIPStatus.OPTIMAL
        assert cell.objective == pytest.approx(20.0)
        assert cell.subtour_cuts is not None
        assert cell.warm_value is None
        assert validate_solution(named_line.instance, named_line.fleet, cell.solution).passed

    def test_warm_started(self, named_line):
        """Test the heuristic start is injected and the MIP still proves the optimum."""
        cell = solve_cell(
            named_line, parse_variant("sc:full"), SolveParams(time_limit_s=60.0),
            warmstart_budget=0.5, clock=_clock(),
        )

        assert cell.status is MIPStatus.OPTIMAL
        assert cell.objective == pytest.approx(20.0)
        assert cell.warm_value >= 20.0 - 1e-6
        assert cell.heuristic_s >= 0.5
        assert cell.subtour_cuts is None
        kinds = [e.kind for e in cell.events]
        assert EventKind.WARM_START.value in kinds
        assert kinds[-1] == EventKind.FINISHED.value

    def test_flexible_fleet_from_variant(self, line_instance):
        """Test a Flexible variant sizes its own fleet when the instance has a Stable one."""
        named = NamedInstance("line", line_instance)

        cell = solve_cell(named, parse_variant("ff:full"), SolveParams(time_limit_s=60.0), clock=_clock())

        assert cell.objective == pytest.approx(20.0)


class TestSweep:
    """Test the warm-start budget sweep."""

    def test_curve(self, named_line):
        points = sweep_warmstart_budget(
            named_line, "sv:base", [0.0, 1.0], total_s=60.0, clock_factory=_clock,
        )

        assert [p.budget_s for p in points] == [0.0, 1.0]
        assert all(p.solved for p in points)
        assert all(p.objective == pytest.approx(20.0) for p in points)
        assert points[1].heuristic_s >= 1.0

    def test_whole_budget_to_heuristic(self, named_line):
        """Test a budget equal to the total leaves only the root relaxation."""
        points = sweep_warmstart_budget(named_line, "sc:base", [5.0], total_s=5.0, clock_factory=_clock)

        point = points[0]
        assert point.warm_value is not None
        assert point.objective is not None
        assert math.isfinite(point.gap)

    def test_budget_outside_total(self, named_line):
        with pytest.raises(ValueError, match="outside"):
            sweep_warmstart_budget(named_line, "sv:base", [10.0], total_s=5.0)


class TestSolveCommand:
    def test_writes_valid_solution(self, tmp_path, capsys):
        """Test `solve` prints a summary and writes a checkable solution."""
        inst = make_instance(
            [(1, 3.0, 0.0, {"general": 4}), (2, 6.0, 0.0, {"general": 3}), (3, 0.0, 4.0, {"general": 5})],
            name="line",
            fleet_spec={"mode": "stable", "counts": {"truck": 2}},
        )
        instance_path = tmp_path / "line.json"
        instance_path.write_text(save_instance(inst))
        output = tmp_path / "solution.json"

        code = main(["solve", str(instance_path), "--model", "sv:base", "--time-limit", "60", "--output", str(output)])

        assert code == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["status"] == "optimal"
        assert summary["objective"] == pytest.approx(20.0)
        solution = solution_from_document(output.read_text())
        assert main(["check", str(instance_path), str(output)]) == EXIT_OK
        assert solution.objective == pytest.approx(20.0)
