"""
Benchmark runner: every (instance, variant) cell solved under a shared limit.
[CTX:PBI-5:5-1:BENCH]

Cells run in worker threads through asyncio with at most `max_concurrency`
solves in flight; rows are assembled in input order so reports do not depend
on scheduling. Each cell gets its own clock from `clock_factory`, which makes
runs with a fake clock reproducible byte for byte.
"""
import asyncio
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from fleet_routing.core.clock import SystemTimeProvider, TimeProvider
from fleet_routing.core.config import WarmstartSettings
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.core.source import NamedInstance
from fleet_routing.core.telemetry import SolveEvent, TelemetryRecorder
from fleet_routing.formulations import (
    BuildOptions,
    DecodeError,
    RoutingKind,
    build_model,
    decode_solution,
    kind_code,
    parse_kind,
)
from fleet_routing.instance import FleetMode
from fleet_routing.mip.model import ModelBuildError
from fleet_routing.solver import MIPStatus, SolveParams, WarmStartError, compute_gap, root_gap, solve_mip
from fleet_routing.strengthen import PRESETS, StrengthenConfig, preset_config
from fleet_routing.warmstart.construct import construct_initial
from fleet_routing.warmstart.encode import encode_start
from fleet_routing.warmstart.lns import lns_improve
from fleet_routing.warmstart.solution import RoutingSolution

logger = logging.getLogger(__name__)

# Root-relaxation allowance when the heuristic used the whole budget
MIN_MIP_LIMIT_S = 1.0


class VariantError(FleetRoutingError):
    """Raised for an unknown model kind or preset in a variant string."""
    pass


@dataclass(frozen=True)
class Variant:
    """
    A model kind with a strengthening preset, written `<kind>[:<preset>]`.

    Attributes:
        code: sc | sv | fc | ff
        preset: base | cuts | symmetry | full
        config: Explicit families, overriding the preset
    """
    code: str
    preset: str = "full"
    config: Optional[StrengthenConfig] = None

    @property
    def fleet_kind(self) -> FleetMode:
        return parse_kind(self.code)[0]

    @property
    def routing_kind(self) -> RoutingKind:
        return parse_kind(self.code)[1]

    @property
    def is_vehicle_flow(self) -> bool:
        return self.routing_kind is RoutingKind.VEHICLE

    @property
    def label(self) -> str:
        if self.config is not None:
            return f"{self.code}:{self.config.label()}"
        return f"{self.code}:{self.preset}"

    def strengthen(self) -> StrengthenConfig:
        if self.config is not None:
            return self.config
        return preset_config(self.preset, self.fleet_kind, self.routing_kind)


def parse_variant(text: str) -> Variant:
    """
    Parse `sc`, `sv:cuts`, `FF:full`, ... (the preset defaults to `full`).

    Raises:
        VariantError: For an unknown kind or preset
    """
    kind, _, preset = text.strip().partition(":")
    preset = (preset or "full").lower()
    try:
        code = kind_code(*parse_kind(kind))
    except ModelBuildError as e:
        raise VariantError(f"Unknown variant '{text}': {e}") from e
    if preset not in PRESETS:
        raise VariantError(f"Unknown preset in variant '{text}', expected one of {list(PRESETS)}")
    return Variant(code=code, preset=preset)


@dataclass
class BenchCell:
    """Outcome of one (instance, variant) solve."""
    variant: str
    status: MIPStatus
    objective: Optional[float]
    bound: float
    gap: float
    wall_s: float
    subtour_cuts: Optional[int] = None
    root_lp_s: Optional[float] = None
    root_value: Optional[float] = None
    first_incumbent_s: Optional[float] = None
    first_incumbent_value: Optional[float] = None
    heuristic_s: float = 0.0
    warm_value: Optional[float] = None
    events: list[SolveEvent] = field(default_factory=list, repr=False)
    solution: Optional[RoutingSolution] = field(default=None, repr=False)

    @property
    def solved(self) -> bool:
        return self.status is MIPStatus.OPTIMAL

    @property
    def rank(self) -> tuple[int, float]:
        """Sort key of the time-or-gap cell: any solve time ranks before any gap."""
        return (0, self.wall_s) if self.solved else (1, self.gap)


@dataclass
class BenchRow:
    """One instance across all variants."""
    instance: str
    cells: dict[str, BenchCell]

    @property
    def best_value(self) -> Optional[float]:
        values = [c.objective for c in self.cells.values() if c.objective is not None]
        return min(values) if values else None

    def best_variants(self) -> list[str]:
        """Variants whose time-or-gap cell is the row-wise minimum."""
        if not self.cells:
            return []
        best = min(cell.rank for cell in self.cells.values())
        return [name for name, cell in self.cells.items() if cell.rank == best]

    def root_gap(self, variant: str) -> float:
        cell = self.cells[variant]
        if cell.root_value is None or self.best_value is None:
            return math.inf
        return root_gap(self.best_value, cell.root_value)

    def first_gap(self, variant: str) -> float:
        cell = self.cells[variant]
        if cell.first_incumbent_value is None or self.best_value is None:
            return math.inf
        return compute_gap(cell.first_incumbent_value, self.best_value)


@dataclass
class BenchReport:
    rows: list[BenchRow]
    variants: list[str]

    def avg_gap(self, variant: str) -> Optional[float]:
        """Mean gap over the rows this variant did not solve; None when it solved all."""
        gaps = [row.cells[variant].gap for row in self.rows if not row.cells[variant].solved]
        if not gaps:
            return None
        return sum(gaps) / len(gaps)

    def solved_count(self, variant: str) -> int:
        return sum(1 for row in self.rows if row.cells[variant].solved)


def solve_cell(
    named: NamedInstance,
    variant: Variant,
    params: SolveParams,
    warmstart_budget: Optional[float] = None,
    seed: int = 0,
    warmstart: Optional[WarmstartSettings] = None,
    clock: Optional[TimeProvider] = None,
    build_options: Optional[BuildOptions] = None,
) -> BenchCell:
    """
    Build and solve one cell.

    With a warm-start budget the heuristic runs first (construction plus LNS
    for the rest of the budget) and the MIP gets the remaining time of
    `params.time_limit_s`. A budget of 0 uses the constructed solution as is.
    Without a budget, `params.heuristic_start` decides whether the solver
    seeds its own incumbent.
    """
    clock = clock or SystemTimeProvider()
    run_id = f"{named.name}/{variant.label}"
    recorder = TelemetryRecorder()
    options = build_options or BuildOptions()
    options = BuildOptions(
        strengthen=variant.strengthen(),
        priorities=options.priorities,
        fleet_slack=options.fleet_slack,
    )
    fleet = named.fleet if named.fleet is not None and named.fleet.mode is variant.fleet_kind else None
    built = build_model(named.instance, variant.fleet_kind, variant.routing_kind, options, fleet)

    warm = None
    warm_value = None
    heuristic_s = 0.0
    mip_limit = params.time_limit_s
    if warmstart_budget is not None:
        started = clock.now()
        start = construct_initial(built.instance, built.fleet, seed=seed, time_provider=clock)
        remaining = warmstart_budget - (clock.now() - started)
        start = lns_improve(
            built.instance, built.fleet, start, remaining,
            seed=seed, settings=warmstart, time_provider=clock, recorder=recorder, run_id=run_id,
        )
        try:
            warm = encode_start(built, start)
            warm_value = start.objective
        except WarmStartError as e:
            logger.warning(f"[CTX:PBI-5:5-1:BENCH] {run_id}: heuristic start rejected, solving cold: {e}")
        heuristic_s = clock.now() - started
        mip_limit = params.time_limit_s - heuristic_s

    root_only = False
    if mip_limit <= 0:
        # No MIP time left: bound the heuristic value with the root relaxation only
        root_only = True
        mip_limit = MIN_MIP_LIMIT_S
    cell_params = SolveParams(
        time_limit_s=mip_limit,
        rel_gap_target=params.rel_gap_target,
        int_tol=params.int_tol,
        feas_tol=params.feas_tol,
        seed=seed,
        lp_backend=params.lp_backend,
        max_nodes=params.max_nodes,
        root_only=root_only or params.root_only,
        time_provider=clock,
        run_id=run_id,
        recorder=recorder,
        heuristic_start=params.heuristic_start and warmstart_budget is None,
    )
    result = solve_mip(built, cell_params, warm=warm)
    solution = None
    if result.assignment is not None:
        try:
            solution = decode_solution(built, result.assignment)
        except DecodeError as e:
            logger.warning(f"[CTX:PBI-5:5-1:BENCH] {run_id}: incumbent could not be decoded: {e}")
    return BenchCell(
        variant=variant.label,
        status=result.status,
        objective=result.objective,
        bound=result.bound,
        gap=result.gap,
        wall_s=heuristic_s + result.wall_s,
        subtour_cuts=result.subtour_cuts if variant.is_vehicle_flow else None,
        root_lp_s=result.root_lp_s,
        root_value=result.root_value,
        first_incumbent_s=result.first_incumbent_s,
        first_incumbent_value=result.first_incumbent_value,
        heuristic_s=heuristic_s + result.heuristic_s,
        warm_value=warm_value,
        events=recorder.get_events(),
        solution=solution,
    )


async def run_benchmark(
    instances: Sequence[NamedInstance],
    variants: Sequence[Variant | str],
    params: Optional[SolveParams] = None,
    warmstart_budget: Optional[float] = None,
    seed: int = 0,
    warmstart: Optional[WarmstartSettings] = None,
    max_concurrency: int = 1,
    clock_factory: Optional[Callable[[], TimeProvider]] = None,
    build_options: Optional[BuildOptions] = None,
) -> BenchReport:
    """
    Solve every (instance, variant) cell.

    Args:
        instances: Instances, one report row each
        variants: Variants or variant strings, one column each
        params: Shared solver parameters (the time limit applies per cell)
        warmstart_budget: Heuristic seconds per cell; None disables warm starts
        seed: Heuristic seed
        warmstart: LNS settings
        max_concurrency: Cells solved at the same time
        clock_factory: Fresh clock per cell
        build_options: Priorities and fleet slack

    Returns:
        BenchReport with rows in input order

    Raises:
        VariantError: For an unknown variant string
        ValueError: Without instances or variants
    """
    if not instances:
        raise ValueError("run_benchmark needs at least one instance")
    if not variants:
        raise ValueError("run_benchmark needs at least one variant")
    parsed = [v if isinstance(v, Variant) else parse_variant(v) for v in variants]
    labels = [v.label for v in parsed]
    if len(set(labels)) != len(labels):
        raise VariantError(f"Duplicate variants {labels}")
    params = params or SolveParams()
    clock_factory = clock_factory or SystemTimeProvider
    semaphore = asyncio.Semaphore(max(1, max_concurrency))

    async def run(named: NamedInstance, variant: Variant) -> BenchCell:
        async with semaphore:
            logger.info(f"[CTX:PBI-5:5-1:BENCH] Solving {named.name} with {variant.label}")
            return await asyncio.to_thread(
                solve_cell, named, variant, params, warmstart_budget, seed,
                warmstart, clock_factory(), build_options,
            )

    tasks = [[run(named, variant) for variant in parsed] for named in instances]
    flat = await asyncio.gather(*(task for row in tasks for task in row))

    rows = []
    for r, named in enumerate(instances):
        cells = flat[r * len(parsed):(r + 1) * len(parsed)]
        rows.append(BenchRow(instance=named.name, cells={c.variant: c for c in cells}))
    report = BenchReport(rows=rows, variants=labels)
    for label in labels:
        avg = report.avg_gap(label)
        logger.info(
            f"[CTX:PBI-5:5-1:BENCH] {label}: solved {report.solved_count(label)}/{len(rows)}"
            + (f", avg gap {avg * 100:.2f}%" if avg is not None else "")
        )
    return report


def run_benchmark_sync(*args, **kwargs) -> BenchReport:
    """Blocking wrapper around `run_benchmark`."""
    return asyncio.run(run_benchmark(*args, **kwargs))
