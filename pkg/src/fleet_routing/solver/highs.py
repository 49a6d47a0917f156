"""
HiGHS back end for the relaxations, through scipy.
[CTX:PBI-3:3-1:SIMPLEX]

Same inputs and result type as `simplex.solve_arrays`; no warm basis.
`HighsRelaxation` keeps the sparse row blocks of one row set so that
branch-and-bound nodes only pass new bounds.
"""
import logging
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from fleet_routing.mip.model import LPArrays, Sense
from fleet_routing.solver.simplex import Basis, LPResult, LPStatus

logger = logging.getLogger(__name__)

_STATUS = {0: LPStatus.OPTIMAL, 1: LPStatus.ITERATION_LIMIT, 2: LPStatus.INFEASIBLE, 3: LPStatus.UNBOUNDED}


def _marginals(result, side: str) -> Optional[np.ndarray]:
    block = getattr(result, side, None)
    values = getattr(block, "marginals", None)
    return None if values is None else np.asarray(values, dtype=float)


class HighsRelaxation:
    """
    The relaxation of fixed rows, re-solved under changing column bounds.

    Example:
        relaxation = HighsRelaxation(model.to_arrays())
        result = relaxation.solve(lower, upper)
    """

    def __init__(self, arrays: LPArrays, feas_tol: float = 1e-7):
        self.c = arrays.c
        self.lower = arrays.lower
        self.upper = arrays.upper
        self.feas_tol = feas_tol
        senses = np.array([s.value for s in arrays.senses])
        le = senses == Sense.LE.value
        ge = senses == Sense.GE.value
        eq = senses == Sense.EQ.value

        b_ub = np.concatenate([arrays.b[le], -arrays.b[ge]])
        self.A_ub = sparse.csr_matrix(np.vstack([arrays.A[le], -arrays.A[ge]])) if len(b_ub) else None
        self.b_ub = b_ub if len(b_ub) else None
        self.A_eq = sparse.csr_matrix(arrays.A[eq]) if eq.any() else None
        self.b_eq = arrays.b[eq] if eq.any() else None

    def solve(self, lower: Optional[np.ndarray] = None, upper: Optional[np.ndarray] = None) -> LPResult:
        lower = self.lower if lower is None else lower
        upper = self.upper if upper is None else upper
        bounds = [
            (None if not np.isfinite(lo) else lo, None if not np.isfinite(hi) else hi)
            for lo, hi in zip(lower, upper)
        ]
        result = linprog(
            self.c,
            A_ub=self.A_ub,
            b_ub=self.b_ub,
            A_eq=self.A_eq,
            b_eq=self.b_eq,
            bounds=bounds,
            method="highs",
            options={"primal_feasibility_tolerance": self.feas_tol},
        )
        iterations = int(getattr(result, "nit", 0) or 0)
        status = _STATUS.get(result.status, LPStatus.ITERATION_LIMIT)
        if status is not LPStatus.OPTIMAL:
            logger.debug(f"[CTX:PBI-3:3-1:SIMPLEX] HiGHS status {result.status}: {result.message}")
            return LPResult(status, iterations=iterations)

        at_lower = _marginals(result, "lower")
        at_upper = _marginals(result, "upper")
        reduced = None if at_lower is None or at_upper is None else at_lower + at_upper
        return LPResult(
            status=status,
            objective=float(result.fun),
            x=np.asarray(result.x, dtype=float),
            basis=None,
            iterations=iterations,
            reduced_costs=reduced,
        )


def solve_arrays_highs(
    arrays: LPArrays,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    basis: Optional[Basis] = None,
    feas_tol: float = 1e-7,
) -> LPResult:
    """Solve a relaxation once with `scipy.optimize.linprog(method="highs")`."""
    return HighsRelaxation(arrays, feas_tol=feas_tol).solve(lower, upper)
