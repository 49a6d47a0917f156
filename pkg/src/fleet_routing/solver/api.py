"""
Entry point for solving built formulations.
[CTX:PBI-3:3-3:API]

Without an explicit start, a built formulation is seeded with the greedy
construction improved by a short LNS run; a start the model rejects is
logged and the search runs cold.
"""
import logging
from dataclasses import replace
from typing import TYPE_CHECKING, Mapping, Optional

from fleet_routing.core.clock import SystemTimeProvider
from fleet_routing.core.config import WarmstartSettings
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.mip.model import Assignment, Model
from fleet_routing.solver.branch_and_bound import BranchAndBound, MIPResult, SolveParams, WarmStartError

if TYPE_CHECKING:
    from fleet_routing.formulations import BuiltModel

logger = logging.getLogger(__name__)

# Share of the time limit, capped, and iteration cap of the seeding LNS
HEURISTIC_SHARE = 0.05
HEURISTIC_MAX_S = 5.0
HEURISTIC_ITERATIONS = 60


def heuristic_start(built: "BuiltModel", params: SolveParams) -> Optional[Assignment]:
    """
    Construction + short LNS, encoded for `built`.

    Returns:
        Starting assignment, or None when the heuristic or the encoding fails
    """
    from fleet_routing.warmstart.construct import construct_initial
    from fleet_routing.warmstart.encode import encode_start
    from fleet_routing.warmstart.lns import lns_improve

    clock = params.time_provider or SystemTimeProvider()
    try:
        start = construct_initial(built.instance, built.fleet, seed=params.seed, time_provider=clock)
        start = lns_improve(
            built.instance, built.fleet, start,
            budget_s=min(HEURISTIC_MAX_S, HEURISTIC_SHARE * params.time_limit_s),
            seed=params.seed,
            settings=WarmstartSettings(max_iterations=HEURISTIC_ITERATIONS),
            time_provider=clock,
            recorder=params.recorder,
            run_id=params.run_id,
        )
        return encode_start(built, start)
    except FleetRoutingError as e:
        logger.info(f"[CTX:PBI-3:3-3:API] {params.run_id}: no heuristic start for {built.model.name}: {e}")
        return None


def solve_mip(
    built: "BuiltModel | Model",
    params: Optional[SolveParams] = None,
    warm: Optional[Mapping[int, float]] = None,
) -> MIPResult:
    """
    Solve a frozen model, or the model of a built formulation.

    Args:
        built: BuiltModel or bare frozen Model
        params: Search parameters; defaults apply when omitted
        warm: Optional complete starting assignment (variable id -> value)

    Returns:
        MIPResult with status, incumbent, bound and statistics; `wall_s`
        includes the seeding heuristic

    Raises:
        WarmStartError: If `warm` violates any row, bound or lazy hook
    """
    model = built if isinstance(built, Model) else built.model
    params = params or SolveParams()
    logger.info(
        f"[CTX:PBI-3:3-3:API] Solving {model.name}: {model.num_variables} vars, "
        f"{model.num_constraints} rows, limit={params.time_limit_s}s, warm={warm is not None}"
    )
    if warm is not None or isinstance(built, Model) or not params.heuristic_start:
        result = BranchAndBound(model, params).solve(warm)
        result.warm_started = warm is not None
        return result

    clock = params.time_provider or SystemTimeProvider()
    started = clock.now()
    seed = heuristic_start(built, replace(params, time_provider=clock))
    spent = clock.now() - started
    remaining = params.time_limit_s - spent
    mip_params = replace(
        params,
        time_provider=clock,
        time_limit_s=remaining if remaining > 0 else params.time_limit_s,
        root_only=params.root_only or remaining <= 0,
    )
    result = None
    if seed is not None:
        try:
            result = BranchAndBound(model, mip_params).solve(seed)
            result.heuristic_seeded = True
        except WarmStartError as e:
            logger.warning(f"[CTX:PBI-3:3-3:API] {params.run_id}: heuristic start rejected, solving cold: {e}")
    if result is None:
        result = BranchAndBound(model, mip_params).solve()
    result.heuristic_s = spent
    result.wall_s += spent
    return result
