"""LP engines, sub-tour separation and branch-and-bound."""

from fleet_routing.solver.api import solve_mip
from fleet_routing.solver.branch_and_bound import (
    BranchAndBound,
    MIPResult,
    MIPStatus,
    SolveParams,
    WarmStartError,
)
from fleet_routing.solver.gap import compute_gap, format_percent, root_gap
from fleet_routing.solver.separation import SeparationError, Subtour, separate_subtours, subtour_cuts
from fleet_routing.solver.simplex import (
    Basis,
    BoundedSimplex,
    InfeasibleError,
    LPError,
    LPResult,
    LPStatus,
    UnboundedError,
    solve_arrays,
    solve_lp,
)

__all__ = [
    "solve_mip",
    "BranchAndBound",
    "MIPResult",
    "MIPStatus",
    "SolveParams",
    "WarmStartError",
    "compute_gap",
    "format_percent",
    "root_gap",
    "SeparationError",
    "Subtour",
    "separate_subtours",
    "subtour_cuts",
    "Basis",
    "BoundedSimplex",
    "InfeasibleError",
    "LPError",
    "LPResult",
    "LPStatus",
    "UnboundedError",
    "solve_arrays",
    "solve_lp",
]
