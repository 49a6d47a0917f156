"""
Warm-start budget sweep.
[CTX:PBI-5:5-2:SWEEP]

A fixed total budget is split between the heuristic and the MIP: the longer
the heuristic runs, the less time the MIP search gets.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from fleet_routing.core.clock import SystemTimeProvider, TimeProvider
from fleet_routing.core.config import WarmstartSettings
from fleet_routing.core.source import NamedInstance
from fleet_routing.formulations import BuildOptions
from fleet_routing.harness.bench import Variant, parse_variant, solve_cell
from fleet_routing.solver import SolveParams
from fleet_routing.solver.gap import compute_gap

logger = logging.getLogger(__name__)


@dataclass
class SweepPoint:
    """
    One budget of the sweep.

    Attributes:
        budget_s: Seconds allotted to the heuristic
        heuristic_s: Seconds the heuristic actually used
        mip_s: Seconds the MIP used
        warm_value: Objective of the heuristic solution
        objective: Final incumbent
        bound: Final bound
        gap: Final gap (warm value against the root bound when no MIP time was left)
        solved: Whether the MIP proved optimality
    """
    budget_s: float
    heuristic_s: float
    mip_s: float
    warm_value: Optional[float]
    objective: Optional[float]
    bound: float
    gap: float
    solved: bool

    @property
    def total_s(self) -> float:
        return self.heuristic_s + self.mip_s


def sweep_warmstart_budget(
    named: NamedInstance,
    variant: Variant | str,
    budgets: Sequence[float],
    total_s: float,
    params: Optional[SolveParams] = None,
    seed: int = 0,
    warmstart: Optional[WarmstartSettings] = None,
    clock_factory: Optional[Callable[[], TimeProvider]] = None,
    build_options: Optional[BuildOptions] = None,
) -> list[SweepPoint]:
    """
    Final gap as a function of the heuristic budget.

    For each budget b the heuristic runs for b seconds and the MIP, warm
    started from its solution, for the rest of `total_s`. Budget 0 starts the
    MIP from the constructed solution.

    Raises:
        ValueError: If a budget lies outside [0, total_s]
    """
    if total_s <= 0:
        raise ValueError("total_s must be positive")
    bad = [b for b in budgets if b < 0 or b > total_s]
    if bad:
        raise ValueError(f"Budgets {bad} lie outside [0, {total_s}]")
    variant = variant if isinstance(variant, Variant) else parse_variant(variant)
    base = params or SolveParams()
    params = SolveParams(
        time_limit_s=total_s,
        rel_gap_target=base.rel_gap_target,
        int_tol=base.int_tol,
        feas_tol=base.feas_tol,
        lp_backend=base.lp_backend,
        max_nodes=base.max_nodes,
    )
    clock_factory = clock_factory or SystemTimeProvider

    curve = []
    for budget in budgets:
        cell = solve_cell(
            named, variant, params,
            warmstart_budget=budget,
            seed=seed,
            warmstart=warmstart,
            clock=clock_factory(),
            build_options=build_options,
        )
        gap = cell.gap
        if cell.objective is None and cell.warm_value is not None:
            gap = compute_gap(cell.warm_value, cell.bound)
        point = SweepPoint(
            budget_s=budget,
            heuristic_s=cell.heuristic_s,
            mip_s=cell.wall_s - cell.heuristic_s,
            warm_value=cell.warm_value,
            objective=cell.objective,
            bound=cell.bound,
            gap=gap,
            solved=cell.solved,
        )
        logger.info(
            f"[CTX:PBI-5:5-2:SWEEP] {named.name} {variant.label} budget={budget}s: "
            f"gap {gap * 100:.2f}% (heuristic {point.heuristic_s:.2f}s, MIP {point.mip_s:.2f}s)"
        )
        curve.append(point)
    return curve
