"""
Best-bound branch-and-bound over LP relaxations.
[CTX:PBI-3:3-2:BNB]

Node selection is best-bound with depth-first plunging: after branching, the
preferred child is solved immediately and its sibling waits in a heap keyed by
(parent bound, creation order). Branching picks the most fractional variable
of the highest priority class that has one, ties by lowest id.

Once an incumbent exists, every solved node fixes the binaries whose reduced
cost alone lifts the node bound past the incumbent; the fixings hold in the
subtree below it.

Lazy hooks fire on integral LP points. Their rows are added globally and the
node is re-solved until the point passes every hook.
"""
import heapq
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from fleet_routing.core.clock import Deadline, SystemTimeProvider, TimeProvider
from fleet_routing.core.config import LP_BACKENDS, ConfigValidationError, SolverSettings
from fleet_routing.core.errors import FleetRoutingError
from fleet_routing.core.telemetry import EventKind, SolveEvent, TelemetryRecorder, create_event, get_recorder
from fleet_routing.mip.model import Assignment, LazyCut, Model, Sense, Violation
from fleet_routing.solver.gap import compute_gap
from fleet_routing.solver.highs import HighsRelaxation
from fleet_routing.solver.simplex import Basis, LPError, LPResult, LPStatus, solve_arrays

logger = logging.getLogger(__name__)

# "auto" hands relaxations with more columns than this to HiGHS
AUTO_HIGHS_COLUMNS = 150


class WarmStartError(FleetRoutingError):
    """Raised when a starting assignment violates the model."""

    def __init__(self, message: str, violations: Sequence[Violation] = ()):
        super().__init__(message)
        self.violations = list(violations)


class MIPStatus(str, Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"        # limit reached with an incumbent
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    UNKNOWN = "unknown"          # limit reached without an incumbent


@dataclass
class SolveParams:
    """
    Branch-and-bound parameters.

    Attributes:
        time_limit_s: Wall-clock limit of one solve, > 0
        rel_gap_target: Stop once the relative gap is at most this
        int_tol: Integrality tolerance
        feas_tol: Primal feasibility tolerance of the LP engine
        seed: Recorded for reproducibility; the search itself is deterministic
        lp_backend: "simplex" (in-repo), "highs" (scipy) or "auto" (by model size)
        max_nodes: Optional node limit
        root_only: Stop after the root relaxation
        time_provider: Clock; defaults to the monotonic system clock
        run_id: Identifier used in telemetry events
        recorder: Telemetry sink; defaults to the global recorder
        heuristic_start: Let `solve_mip` seed an incumbent when no start is given
    """
    time_limit_s: float = 900.0
    rel_gap_target: float = 1e-6
    int_tol: float = 1e-6
    feas_tol: float = 1e-7
    seed: int = 0
    lp_backend: str = "auto"
    max_nodes: Optional[int] = None
    root_only: bool = False
    time_provider: Optional[TimeProvider] = None
    run_id: str = "solve"
    recorder: Optional[TelemetryRecorder] = None
    heuristic_start: bool = True

    def __post_init__(self):
        if self.time_limit_s is None or self.time_limit_s <= 0:
            raise ConfigValidationError("time_limit_s must be positive")
        if self.lp_backend not in LP_BACKENDS:
            raise ConfigValidationError(f"Unknown LP backend '{self.lp_backend}'")

    @classmethod
    def from_settings(cls, settings: SolverSettings, **overrides) -> "SolveParams":
        """Parameters from the `solver` config section; keyword overrides win."""
        values = dict(
            time_limit_s=settings.time_limit_s,
            rel_gap_target=settings.rel_gap_target,
            int_tol=settings.int_tol,
            feas_tol=settings.feas_tol,
            lp_backend=settings.lp_backend,
            max_nodes=settings.max_nodes,
            heuristic_start=settings.heuristic_start,
        )
        values.update(overrides)
        return cls(**values)


@dataclass
class MIPResult:
    """Outcome and statistics of one branch-and-bound run."""
    status: MIPStatus
    objective: Optional[float] = None
    assignment: Optional[Assignment] = None
    bound: float = -math.inf
    gap: float = math.inf
    nodes: int = 0
    subtour_cuts: int = 0
    lp_iterations: int = 0
    wall_s: float = 0.0
    root_lp_s: Optional[float] = None
    root_value: Optional[float] = None
    first_incumbent_s: Optional[float] = None
    first_incumbent_value: Optional[float] = None
    warm_started: bool = False
    heuristic_seeded: bool = False
    heuristic_s: float = 0.0
    rc_fixed: int = 0
    events: list[SolveEvent] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.objective is not None

    @property
    def solved(self) -> bool:
        return self.status is MIPStatus.OPTIMAL

    def summary(self) -> dict:
        return {
            "status": self.status.value,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "subtour_cuts": self.subtour_cuts,
            "wall_s": self.wall_s,
            "root_lp_s": self.root_lp_s,
            "root_value": self.root_value,
            "first_incumbent_s": self.first_incumbent_s,
            "first_incumbent_value": self.first_incumbent_value,
        }


@dataclass
class _Node:
    bound: float
    depth: int
    fixings: dict[int, float]
    basis: Optional[Basis] = None


class BranchAndBound:
    """
    Branch-and-bound driver for one frozen model.

    Cuts from lazy hooks live in this object only; the model is not modified.
    """

    def __init__(
        self,
        model: Model,
        params: Optional[SolveParams] = None,
        lazy_hooks: Optional[Sequence[Callable[[Mapping[int, float]], list[LazyCut]]]] = None,
    ):
        self.model = model
        self.params = params or SolveParams()
        self.lazy_hooks = list(model.lazy_hooks if lazy_hooks is None else lazy_hooks)
        self.arrays = model.to_arrays()
        self.A = self.arrays.A
        self.b = self.arrays.b
        self.senses = list(self.arrays.senses)
        self.integer_ids = np.flatnonzero(self.arrays.integer)
        self.binary_ids = np.flatnonzero(
            self.arrays.integer & (self.arrays.lower == 0.0) & (self.arrays.upper == 1.0)
        )
        self.priority = self.arrays.priority
        self.recorder = self.params.recorder or get_recorder()
        self.clock = self.params.time_provider or SystemTimeProvider()
        self.events: list[SolveEvent] = []
        self.cut_tags: list[str] = []

        self.incumbent: Optional[np.ndarray] = None
        self.incumbent_value = math.inf
        self.best_bound = -math.inf
        self.nodes = 0
        self.lp_iterations = 0
        self.first_incumbent_s: Optional[float] = None
        self.first_incumbent_value: Optional[float] = None
        self.rc_fixed = 0
        self._seq = 0
        self.backend = self.params.lp_backend
        if self.backend == "auto":
            self.backend = "highs" if model.num_variables > AUTO_HIGHS_COLUMNS else "simplex"
        self._highs: Optional[HighsRelaxation] = None

    # -- helpers ----------------------------------------------------------

    def _emit(self, kind: EventKind, value=None, bound=None, **detail) -> None:
        event = create_event(
            run_id=self.params.run_id,
            source="bnb",
            kind=kind,
            wall_s=self.deadline.elapsed(),
            node=self.nodes,
            value=value,
            bound=bound,
            detail=detail,
        )
        self.events.append(event)
        self.recorder.record(event)

    def _lp(self, fixings: Mapping[int, float], basis: Optional[Basis]) -> LPResult:
        lower = self.arrays.lower.copy()
        upper = self.arrays.upper.copy()
        for var, value in fixings.items():
            lower[var] = value
            upper[var] = value
        arrays = self.arrays
        if self.A is not arrays.A:
            arrays = replace(arrays, A=self.A, b=self.b, senses=self.senses)
        if self.backend == "highs":
            if self._highs is None:
                self._highs = HighsRelaxation(arrays, feas_tol=self.params.feas_tol)
            result = self._highs.solve(lower, upper)
        else:
            result = solve_arrays(arrays, lower, upper, basis, feas_tol=self.params.feas_tol)
        self.lp_iterations += result.iterations
        if result.status is LPStatus.ITERATION_LIMIT:
            raise LPError(f"LP iteration limit at node {self.nodes} of '{self.model.name}'")
        return result

    def _add_cuts(self, cuts: Sequence[LazyCut]) -> None:
        rows = np.zeros((len(cuts), self.A.shape[1]))
        for r, cut in enumerate(cuts):
            for var, coef in cut.coeffs.items():
                rows[r, var] = coef
        self.A = np.vstack([self.A, rows])
        self.b = np.concatenate([self.b, [cut.rhs for cut in cuts]])
        self.senses.extend(cut.sense for cut in cuts)
        self.cut_tags.extend(cut.tag for cut in cuts)
        self._highs = None

    def _rounded(self, x: np.ndarray) -> np.ndarray:
        values = x.copy()
        values[self.integer_ids] = np.round(values[self.integer_ids])
        return values

    def _fractional(self, x: np.ndarray) -> np.ndarray:
        values = x[self.integer_ids]
        return self.integer_ids[np.abs(values - np.round(values)) > self.params.int_tol]

    def _select_branch(self, x: np.ndarray, fractional: np.ndarray) -> int:
        top = self.priority[fractional].max()
        group = fractional[self.priority[fractional] == top]
        distance = np.abs(x[group] - 0.5)
        # argmin returns the first (lowest id) among ties
        return int(group[np.argmin(distance)])

    def _prunable(self, bound: float) -> bool:
        if self.incumbent is None:
            return False
        slack = self.params.rel_gap_target * max(abs(self.incumbent_value), 1e-9)
        return bound >= self.incumbent_value - slack - 1e-9

    def _reduced_cost_fixings(self, result: LPResult, fixings: Mapping[int, float]) -> dict[int, float]:
        """Binaries at an LP bound whose reduced cost prices the other value out."""
        if self.incumbent is None or result.reduced_costs is None or not len(self.binary_ids):
            return {}
        slack = self.params.rel_gap_target * max(abs(self.incumbent_value), 1e-9)
        margin = 1e-6 * max(1.0, abs(self.incumbent_value))
        threshold = self.incumbent_value - slack + margin - result.objective
        if threshold <= 0:
            return {}
        ids = self.binary_ids
        reduced = result.reduced_costs[ids]
        x = result.x[ids]
        tol = self.params.int_tol
        fixed: dict[int, float] = {}
        for var in ids[(x <= tol) & (reduced >= threshold)]:
            if int(var) not in fixings:
                fixed[int(var)] = 0.0
        for var in ids[(x >= 1.0 - tol) & (-reduced >= threshold)]:
            if int(var) not in fixings:
                fixed[int(var)] = 1.0
        return fixed

    def _accept(self, values: np.ndarray, objective: float, source: str) -> None:
        if objective >= self.incumbent_value - 1e-9:
            return
        self.incumbent = values
        self.incumbent_value = objective
        if self.first_incumbent_s is None:
            self.first_incumbent_s = self.deadline.elapsed()
            self.first_incumbent_value = objective
        self._emit(EventKind.INCUMBENT, value=objective, bound=self._public_bound(), via=source)

    def _public_bound(self) -> Optional[float]:
        if not math.isfinite(self.best_bound):
            return None
        return min(self.best_bound, self.incumbent_value)

    def _update_bound(self, candidate: float) -> None:
        if candidate > self.best_bound + 1e-12:
            self.best_bound = candidate
            self._emit(EventKind.BOUND, value=self._incumbent_or_none(), bound=self._public_bound())

    def _incumbent_or_none(self) -> Optional[float]:
        return None if self.incumbent is None else self.incumbent_value

    def _load_warm_start(self, warm: Mapping[int, float]) -> None:
        violations = self.model.check_assignment(warm, tol=max(1e-6, 10 * self.params.feas_tol))
        if violations:
            raise WarmStartError(
                f"Warm start violates {violations[0].tag} ({violations[0]})", violations
            )
        values = np.zeros(self.model.num_variables)
        for var, value in warm.items():
            values[var] = value
        values = self._rounded(values)
        point = {i: float(v) for i, v in enumerate(values)}
        for hook in self.lazy_hooks:
            cuts = hook(point)
            if cuts:
                raise WarmStartError(f"Warm start violates {cuts[0].tag}")
        objective = float(self.arrays.c @ values)
        self._emit(EventKind.WARM_START, value=objective)
        self._accept(values, objective, source="warm_start")

    # -- search -----------------------------------------------------------

    def _process(self, node: _Node, is_root: bool) -> tuple[str, Optional[tuple[_Node, _Node]]]:
        """
        Solve one node, resolving lazy rows on integral points.

        Returns:
            (outcome, children) where outcome is "pruned", "integral",
            "branched", "unbounded"; children = (preferred, other) when branched
        """
        basis = node.basis
        first = True
        while True:
            result = self._lp(node.fixings, basis)
            if is_root and first:
                self.root_lp_s = self.deadline.elapsed()
                self.root_value = result.objective if result.optimal else None
                if result.optimal:
                    self._emit(EventKind.ROOT_LP, bound=result.objective, iterations=result.iterations)
            first = False
            if result.status is LPStatus.INFEASIBLE:
                return "pruned", None
            if result.status is LPStatus.UNBOUNDED:
                return "unbounded", None
            if self._prunable(result.objective):
                return "pruned", None

            fractional = self._fractional(result.x)
            if len(fractional) == 0:
                values = self._rounded(result.x)
                point = {i: float(v) for i, v in enumerate(values)}
                cuts = [cut for hook in self.lazy_hooks for cut in hook(point)]
                if cuts:
                    self._add_cuts(cuts)
                    self._emit(EventKind.LAZY_CUT, rows=len(cuts), tags=[c.tag for c in cuts])
                    basis = result.basis
                    if self.params.root_only and is_root:
                        return "pruned", None
                    continue
                self._accept(values, float(self.arrays.c @ values), source="lp")
                return "integral", None

            if self.params.root_only and is_root:
                return "pruned", None
            var = self._select_branch(result.x, fractional)
            up_first = result.x[var] >= 0.5
            fixed = self._reduced_cost_fixings(result, node.fixings)
            self.rc_fixed += len(fixed)
            children = []
            for value in ((1.0, 0.0) if up_first else (0.0, 1.0)):
                fixings = dict(node.fixings)
                fixings.update(fixed)
                fixings[var] = value
                children.append(_Node(
                    bound=result.objective,
                    depth=node.depth + 1,
                    fixings=fixings,
                    basis=result.basis,
                ))
            return "branched", (children[0], children[1])

    def _push(self, heap: list, node: _Node) -> None:
        self._seq += 1
        heapq.heappush(heap, (node.bound, self._seq, node))

    def solve(self, warm: Optional[Mapping[int, float]] = None) -> MIPResult:
        """
        Run the search.

        Args:
            warm: Optional starting assignment; it becomes the first incumbent

        Raises:
            WarmStartError: If the starting assignment violates a row or bound
        """
        self.deadline = Deadline(self.params.time_limit_s, self.clock)
        self.root_lp_s: Optional[float] = None
        self.root_value: Optional[float] = None
        if warm is not None:
            self._load_warm_start(warm)

        heap: list = []
        current: Optional[_Node] = _Node(bound=-math.inf, depth=0, fixings={})
        is_root = True
        limit_hit = False
        unbounded = False

        while current is not None or heap:
            if current is None:
                _, _, current = heapq.heappop(heap)
                if self._prunable(current.bound):
                    current = None
                    continue

            if self.deadline.expired() or (
                self.params.max_nodes is not None and self.nodes >= self.params.max_nodes
            ):
                self._push(heap, current)
                current = None
                limit_hit = True
                break

            self.nodes += 1
            outcome, children = self._process(current, is_root)
            if is_root and self.params.root_only:
                if self.root_value is not None:
                    self._update_bound(self.root_value)
                if outcome == "unbounded":
                    unbounded = True
                elif outcome != "integral" or heap:
                    limit_hit = self.root_value is not None
                    if self.root_value is not None:
                        self._push(heap, _Node(self.root_value, 0, {}))
                current = None
                break
            is_root = False

            if outcome == "unbounded":
                unbounded = True
                current = None
                break
            if outcome == "branched":
                preferred, other = children
                self._push(heap, other)
                current = preferred
            else:
                current = None

            frontier = [heap[0][0]] if heap else []
            if current is not None:
                frontier.append(current.bound)
            if frontier:
                self._update_bound(min(frontier))
                if self.incumbent is not None and compute_gap(
                    self.incumbent_value, self._public_bound()
                ) <= self.params.rel_gap_target:
                    break

        return self._result(heap, current, limit_hit, unbounded)

    def _result(self, heap: list, current: Optional[_Node], limit_hit: bool, unbounded: bool) -> MIPResult:
        open_bounds = [entry[0] for entry in heap]
        if current is not None:
            open_bounds.append(current.bound)
        has_incumbent = self.incumbent is not None

        if unbounded:
            status = MIPStatus.UNBOUNDED
        elif not open_bounds:
            status = MIPStatus.OPTIMAL if has_incumbent else MIPStatus.INFEASIBLE
            if has_incumbent:
                self.best_bound = max(self.best_bound, self.incumbent_value)
        else:
            self.best_bound = max(self.best_bound, min(open_bounds))
            gap_closed = has_incumbent and compute_gap(
                self.incumbent_value, self._public_bound()
            ) <= self.params.rel_gap_target
            if gap_closed:
                status = MIPStatus.OPTIMAL
            else:
                status = MIPStatus.FEASIBLE if has_incumbent else MIPStatus.UNKNOWN

        if limit_hit and status in (MIPStatus.FEASIBLE, MIPStatus.UNKNOWN):
            self._emit(EventKind.TIMEOUT, value=self._incumbent_or_none(), bound=self._public_bound())

        bound = self._public_bound() if math.isfinite(self.best_bound) else -math.inf
        objective = self.incumbent_value if has_incumbent else None
        gap = compute_gap(objective, bound) if has_incumbent else math.inf
        result = MIPResult(
            status=status,
            objective=objective,
            assignment=(
                {i: float(v) for i, v in enumerate(self.incumbent)} if has_incumbent else None
            ),
            bound=bound,
            gap=gap,
            nodes=self.nodes,
            subtour_cuts=len(self.cut_tags),
            lp_iterations=self.lp_iterations,
            wall_s=self.deadline.elapsed(),
            rc_fixed=self.rc_fixed,
            root_lp_s=self.root_lp_s,
            root_value=self.root_value,
            first_incumbent_s=self.first_incumbent_s,
            first_incumbent_value=self.first_incumbent_value,
            events=self.events,
        )
        self._emit(EventKind.FINISHED, value=objective, bound=bound if math.isfinite(bound) else None,
                   status=status.value, nodes=self.nodes, subtour_cuts=result.subtour_cuts)
        result.events = list(self.events)
        logger.info(
            f"[CTX:PBI-3:3-2:BNB] {self.params.run_id}: {status.value} obj={objective} "
            f"bound={bound:.6g} nodes={self.nodes} cuts={result.subtour_cuts} rc_fixed={self.rc_fixed} "
            f"lp={self.backend} wall={result.wall_s:.2f}s"
        )
        return result
