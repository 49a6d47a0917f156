"""
Bounded-variable primal simplex on dense numpy arrays.
[CTX:PBI-3:3-1:SIMPLEX]

Rows are written as A·x + s = b with one logical (slack) column per row;
slack bounds encode the sense: <= gives s in [0, inf), >= gives s in
(-inf, 0], = gives s = 0. The starting basis is the slack basis (or a basis
handed over by a parent node), so phase 1 is the composite method: basic
variables outside their bounds are priced at -1 / +1 until none remain,
then the real costs take over.

Pricing is Dantzig's rule; after a run of degenerate pivots the engine
switches to Bland's rule until the next non-degenerate step. The basis
inverse is kept explicitly, updated by product-form pivots and
refactorised periodically.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.mip.model import LPArrays, Model, Sense

logger = logging.getLogger(__name__)

FEASIBILITY_TOL = 1e-7
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-9


class LPError(FleetRoutingError):
    """Raised when a relaxation cannot be solved."""
    pass


class InfeasibleError(LPError):
    pass


class UnboundedError(LPError):
    pass


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class Basis:
    """
    A simplex basis over the columns [structurals | slacks].

    Attributes:
        basic: Column index per row
        at_upper: Per column, whether a nonbasic column sits at its upper bound
    """
    basic: list[int]
    at_upper: np.ndarray

    def extended(self, n_structural: int, n_rows: int) -> "Basis":
        """The same basis with the slacks of rows appended since it was taken."""
        basic = list(self.basic) + [n_structural + r for r in range(len(self.basic), n_rows)]
        at_upper = np.zeros(n_structural + n_rows, dtype=bool)
        at_upper[: len(self.at_upper)] = self.at_upper
        return Basis(basic=basic, at_upper=at_upper)


@dataclass
class LPResult:
    status: LPStatus
    objective: float = float("nan")
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    basis: Optional[Basis] = None
    iterations: int = 0
    # c - A^T y per structural column; None when the engine does not report it
    reduced_costs: Optional[np.ndarray] = None

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


def slack_bounds(senses: Sequence[Sense]) -> tuple[np.ndarray, np.ndarray]:
    lower = np.array([-np.inf if s is Sense.GE else 0.0 for s in senses], dtype=float)
    upper = np.array([np.inf if s is Sense.LE else 0.0 for s in senses], dtype=float)
    return lower, upper


class BoundedSimplex:
    """
    Primal simplex for min c·x s.t. A·x (senses) b, lower <= x <= upper.

    Example:
        engine = BoundedSimplex(arrays.A, arrays.b, arrays.senses, arrays.c,
                                arrays.lower, arrays.upper)
        result = engine.solve()
    """

    def __init__(
        self,
        A: np.ndarray,
        b: np.ndarray,
        senses: Sequence[Sense],
        c: np.ndarray,
        lower: np.ndarray,
        upper: np.ndarray,
        feas_tol: float = FEASIBILITY_TOL,
        opt_tol: float = OPTIMALITY_TOL,
        max_iterations: Optional[int] = None,
        refactor_every: int = 100,
        bland_after: int = 50,
    ):
        self.A = np.asarray(A, dtype=float)
        self.m, self.n = self.A.shape
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        slack_lo, slack_hi = slack_bounds(senses)
        self.lo = np.concatenate([np.asarray(lower, dtype=float), slack_lo])
        self.hi = np.concatenate([np.asarray(upper, dtype=float), slack_hi])
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_iterations = max_iterations or 50 * (self.m + self.n) + 1000
        self.refactor_every = refactor_every
        self.bland_after = bland_after

    # -- linear algebra helpers -------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.A[:, j]
        col = np.zeros(self.m)
        col[j - self.n] = 1.0
        return col

    def _basis_matrix(self, basic: Sequence[int]) -> np.ndarray:
        B = np.zeros((self.m, self.m))
        for r, j in enumerate(basic):
            if j < self.n:
                B[:, r] = self.A[:, j]
            else:
                B[j - self.n, r] = 1.0
        return B

    def _basic_values(self, x: np.ndarray, basic: Sequence[int], Binv: np.ndarray) -> np.ndarray:
        x = x.copy()
        x[list(basic)] = 0.0
        rhs = self.b - self.A @ x[: self.n] - x[self.n:]
        return Binv @ rhs

    def _nonbasic_value(self, j: int, at_upper: bool) -> float:
        lo, hi = self.lo[j], self.hi[j]
        if at_upper and np.isfinite(hi):
            return hi
        if np.isfinite(lo):
            return lo
        if np.isfinite(hi):
            return hi
        return 0.0

    # -- main loop --------------------------------------------------------

    def solve(self, basis: Optional[Basis] = None) -> LPResult:
        """
        Run the simplex from the slack basis or a warm basis.

        Returns:
            LPResult; `x` holds structural values only
        """
        m, n = self.m, self.n
        total = n + m
        if basis is not None and len(basis.basic) < m:
            basis = basis.extended(n, m)
        if basis is not None and len(basis.basic) == m and len(basis.at_upper) == total:
            basic = list(basis.basic)
            at_upper = basis.at_upper.copy()
        else:
            basic = [n + r for r in range(m)]
            at_upper = np.zeros(total, dtype=bool)

        is_basic = np.zeros(total, dtype=bool)
        is_basic[basic] = True
        x = np.zeros(total)
        for j in np.flatnonzero(~is_basic):
            x[j] = self._nonbasic_value(j, bool(at_upper[j]))
            at_upper[j] = np.isfinite(self.hi[j]) and x[j] == self.hi[j] and x[j] != self.lo[j]

        try:
            Binv = np.linalg.inv(self._basis_matrix(basic))
        except np.linalg.LinAlgError:
            logger.debug("[CTX:PBI-3:3-1:SIMPLEX] Singular warm basis, restarting from slacks")
            return self.solve(None)
        x[basic] = self._basic_values(x, basic, Binv)

        cost_full = np.concatenate([self.c, np.zeros(m)])
        free = ~np.isfinite(self.lo) & ~np.isfinite(self.hi)
        movable = self.hi > self.lo
        degenerate_run = 0
        bland = False
        since_refactor = 0
        verified = False

        for iteration in range(1, self.max_iterations + 1):
            basic_arr = np.asarray(basic)
            xB = x[basic_arr]
            lB, uB = self.lo[basic_arr], self.hi[basic_arr]
            below = xB < lB - self.feas_tol
            above = xB > uB + self.feas_tol
            phase1 = bool(below.any() or above.any())

            if phase1:
                cB = np.where(below, -1.0, np.where(above, 1.0, 0.0))
                pi = cB @ Binv
                d = np.concatenate([-(pi @ self.A), -pi])
            else:
                pi = cost_full[basic_arr] @ Binv
                d = cost_full - np.concatenate([pi @ self.A, pi])

            nonbasic = ~is_basic & movable
            increase = nonbasic & ~at_upper & (d < -self.opt_tol)
            decrease = nonbasic & at_upper & (d > self.opt_tol)
            free_move = nonbasic & free & (np.abs(d) > self.opt_tol)
            candidates = increase | decrease | free_move

            if not candidates.any():
                if not verified and since_refactor:
                    Binv = np.linalg.inv(self._basis_matrix(basic))
                    x[basic_arr] = self._basic_values(x, basic, Binv)
                    since_refactor = 0
                    verified = True
                    continue
                if phase1:
                    return LPResult(LPStatus.INFEASIBLE, iterations=iteration)
                return self._finish(x, basic, at_upper, iteration, d[: self.n])
            verified = False

            candidate_ids = np.flatnonzero(candidates)
            if bland:
                j = int(candidate_ids[0])
            else:
                j = int(candidate_ids[np.argmax(np.abs(d[candidate_ids]))])
            step = 1.0 if (d[j] < 0) else -1.0

            alpha = Binv[:, j - n] if j >= n else Binv @ self.A[:, j]
            delta = -step * alpha

            limit = np.full(m, np.inf)
            leaves_upper = np.zeros(m, dtype=bool)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            feasible = ~(below | above)
            with np.errstate(divide="ignore", invalid="ignore"):
                hit_lower = (feasible & dec & np.isfinite(lB)) | (below & inc)
                hit_upper = (feasible & inc & np.isfinite(uB)) | (above & dec)
                limit = np.where(hit_lower, (xB - lB) / -delta, limit)
                limit = np.where(hit_lower & below, (lB - xB) / delta, limit)
                limit = np.where(hit_upper, (uB - xB) / delta, limit)
                limit = np.where(hit_upper & above, (xB - uB) / -delta, limit)
            leaves_upper = hit_upper
            limit = np.maximum(limit, 0.0)

            theta_rows = float(limit.min()) if m else np.inf
            theta_flip = self.hi[j] - self.lo[j] if np.isfinite(self.hi[j] - self.lo[j]) else np.inf

            if not np.isfinite(theta_rows) and not np.isfinite(theta_flip):
                if phase1:
                    raise LPError("Phase 1 ray without blocking row; numerical trouble")
                return LPResult(LPStatus.UNBOUNDED, iterations=iteration)

            if theta_flip <= theta_rows:
                x[basic_arr] = xB + delta * theta_flip
                x[j] += step * theta_flip
                at_upper[j] = not at_upper[j]
                theta = theta_flip
            else:
                ties = np.flatnonzero(limit <= theta_rows + 1e-12)
                if bland:
                    r = int(min(ties, key=lambda i: basic[i]))
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                theta = theta_rows
                x[basic_arr] = xB + delta * theta
                x[j] += step * theta
                leaving = basic[r]
                x[leaving] = self.hi[leaving] if leaves_upper[r] else self.lo[leaving]
                at_upper[leaving] = bool(leaves_upper[r])
                is_basic[leaving] = False
                is_basic[j] = True
                at_upper[j] = False
                basic[r] = j

                pivot_row = Binv[r] / alpha[r]
                Binv -= np.outer(alpha, pivot_row)
                Binv[r] = pivot_row
                since_refactor += 1
                if since_refactor >= self.refactor_every:
                    Binv = np.linalg.inv(self._basis_matrix(basic))
                    x[np.asarray(basic)] = self._basic_values(x, basic, Binv)
                    since_refactor = 0

            if theta <= 1e-12:
                degenerate_run += 1
                if degenerate_run >= self.bland_after and not bland:
                    logger.debug(f"[CTX:PBI-3:3-1:SIMPLEX] Stalling after {degenerate_run} pivots, Bland's rule on")
                    bland = True
            else:
                degenerate_run = 0
                bland = False

        return LPResult(LPStatus.ITERATION_LIMIT, iterations=self.max_iterations)

    def _finish(
        self, x: np.ndarray, basic: list[int], at_upper: np.ndarray, iterations: int, reduced: np.ndarray
    ) -> LPResult:
        structural = np.clip(x[: self.n], self.lo[: self.n], self.hi[: self.n])
        return LPResult(
            status=LPStatus.OPTIMAL,
            objective=float(self.c @ structural),
            x=structural,
            basis=Basis(basic=list(basic), at_upper=at_upper.copy()),
            iterations=iterations,
            reduced_costs=reduced.copy(),
        )


def solve_arrays(
    arrays: LPArrays,
    lower: Optional[np.ndarray] = None,
    upper: Optional[np.ndarray] = None,
    basis: Optional[Basis] = None,
    feas_tol: float = FEASIBILITY_TOL,
) -> LPResult:
    """Solve the relaxation of dense arrays, optionally with overridden bounds and a warm basis."""
    engine = BoundedSimplex(
        arrays.A,
        arrays.b,
        arrays.senses,
        arrays.c,
        arrays.lower if lower is None else lower,
        arrays.upper if upper is None else upper,
        feas_tol=feas_tol,
    )
    return engine.solve(basis)


def solve_lp(model: Model, feas_tol: float = FEASIBILITY_TOL) -> LPResult:
    """
    Solve the LP relaxation of a model.

    Raises:
        LPError: If the model has no variables
        InfeasibleError: If no point satisfies the rows and bounds
        UnboundedError: If the objective is unbounded below
    """
    if model.num_variables == 0:
        raise LPError("Cannot solve a model without variables")
    result = solve_arrays(model.to_arrays(), feas_tol=feas_tol)
    if result.status is LPStatus.INFEASIBLE:
        raise InfeasibleError(f"LP relaxation of '{model.name}' is infeasible")
    if result.status is LPStatus.UNBOUNDED:
        raise UnboundedError(f"LP relaxation of '{model.name}' is unbounded")
    if result.status is LPStatus.ITERATION_LIMIT:
        raise LPError(f"Iteration limit reached on '{model.name}'")
    return result
