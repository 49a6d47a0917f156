"""
Mixed-integer linear program intermediate representation.
[CTX:PBI-2:2-1:MIP]

A `Model` holds binary and continuous variables, tagged linear constraints,
a minimisation objective and the lazy-separation hooks registered by the
formulation builders. Models are mutable while being built and immutable
after `freeze()`.

Every constraint carries a tag such as `demand[i=1,k=chilled]`; the part
before `[` is the constraint family. Untagged bookkeeping rows use the
family `plumbing`.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np

from fleet_routing.core.errors import FleetRoutingError

logger = logging.getLogger(__name__)

PLUMBING = "plumbing"

# Variable id -> value
Assignment = dict[int, float]


class ModelBuildError(FleetRoutingError):
    """Raised on malformed variables or constraints, or an infeasible-by-construction model."""
    pass


class ModelFrozenError(FleetRoutingError):
    """Raised when a frozen model is modified."""
    pass


class VarKind(str, Enum):
    BINARY = "binary"
    CONTINUOUS = "continuous"


class Sense(str, Enum):
    LE = "<="
    EQ = "="
    GE = ">="


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: VarKind
    lower: float
    upper: float
    obj: float
    priority: int = 0

    @property
    def is_integer(self) -> bool:
        return self.kind is VarKind.BINARY


@dataclass(frozen=True)
class Constraint:
    id: int
    coeffs: dict[int, float]
    sense: Sense
    rhs: float
    tag: str = PLUMBING

    @property
    def family(self) -> str:
        return family_of(self.tag)

    def lhs(self, values: Mapping[int, float]) -> float:
        return sum(coef * values.get(var, 0.0) for var, coef in self.coeffs.items())

    def violation(self, values: Mapping[int, float]) -> float:
        """Amount by which `values` violate the row (0 when satisfied)."""
        lhs = self.lhs(values)
        if self.sense is Sense.LE:
            return max(0.0, lhs - self.rhs)
        if self.sense is Sense.GE:
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(frozen=True)
class LazyCut:
    """A row produced by a lazy separation hook."""
    coeffs: dict[int, float]
    sense: Sense
    rhs: float
    tag: str


# Receives an integral point, returns the violated rows (empty when none)
LazyHook = Callable[[Mapping[int, float]], list[LazyCut]]


@dataclass(frozen=True)
class Violation:
    """One failed check of `Model.check_assignment`."""
    tag: str
    lhs: float
    sense: str
    rhs: float

    def __str__(self) -> str:
        return f"{self.tag}: {self.lhs:g} {self.sense} {self.rhs:g}"


@dataclass
class LPArrays:
    """Dense numeric form of a model, consumed by the LP engines."""
    c: np.ndarray
    A: np.ndarray
    senses: list[Sense]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    integer: np.ndarray
    priority: np.ndarray
    tags: list[str] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


def family_of(tag: str) -> str:
    """Constraint family of a tag: the text before the first `[`."""
    return tag.split("[", 1)[0]


class Model:
    """
    A minimisation MILP under construction or frozen.

    Example:
        model = Model("toy")
        x = model.add_variable(VarKind.BINARY, obj=-1.0)
        y = model.add_variable(VarKind.BINARY, obj=-1.0)
        model.add_linear_constraint({x: 1.0, y: 1.0}, Sense.LE, 1.0, tag="pick_one")
        model.freeze()
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self._variables: list[Variable] = []
        self._constraints: list[Constraint] = []
        self._lazy_hooks: list[LazyHook] = []
        self._frozen = False
        self._arrays: Optional[LPArrays] = None

    # -- construction ----------------------------------------------------

    def _check_mutable(self) -> None:
        if self._frozen:
            raise ModelFrozenError(f"Model '{self.name}' is frozen")

    def add_variable(
        self,
        kind: VarKind = VarKind.CONTINUOUS,
        lower: float = 0.0,
        upper: float = float("inf"),
        obj: float = 0.0,
        priority: int = 0,
        name: Optional[str] = None,
    ) -> int:
        """
        Declare a variable.

        Binary variables always get bounds [0, 1].

        Returns:
            The fresh variable id

        Raises:
            ModelBuildError: If lower > upper
        """
        self._check_mutable()
        if kind is VarKind.BINARY:
            lower, upper = 0.0, 1.0
        if lower > upper:
            raise ModelBuildError(f"Inverted bounds [{lower}, {upper}] for variable {name!r}")
        var_id = len(self._variables)
        self._variables.append(Variable(
            id=var_id,
            name=name or f"v{var_id}",
            kind=kind,
            lower=float(lower),
            upper=float(upper),
            obj=float(obj),
            priority=int(priority),
        ))
        return var_id

    def add_linear_constraint(
        self,
        row: Mapping[int, float],
        sense: Sense,
        rhs: float,
        tag: str = PLUMBING,
    ) -> int:
        """
        Append a row `Σ coef·var (sense) rhs`.

        Zero coefficients are dropped; the remaining row must be nonempty.

        Returns:
            The constraint id

        Raises:
            ModelBuildError: On an empty row or an undeclared variable id
        """
        self._check_mutable()
        coeffs = {int(var): float(coef) for var, coef in row.items() if coef != 0}
        if not coeffs:
            raise ModelBuildError(f"Empty constraint row '{tag}'")
        for var in coeffs:
            if not 0 <= var < len(self._variables):
                raise ModelBuildError(f"Constraint '{tag}' references unknown variable {var}")
        constraint_id = len(self._constraints)
        self._constraints.append(Constraint(
            id=constraint_id,
            coeffs=coeffs,
            sense=Sense(sense),
            rhs=float(rhs),
            tag=tag,
        ))
        return constraint_id

    def register_lazy_hook(self, hook: LazyHook) -> None:
        self._check_mutable()
        self._lazy_hooks.append(hook)

    def freeze(self) -> "Model":
        """Make the model immutable; returns self for chaining."""
        self._frozen = True
        return self

    # -- access ----------------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def variables(self) -> Sequence[Variable]:
        return tuple(self._variables)

    @property
    def constraints(self) -> Sequence[Constraint]:
        return tuple(self._constraints)

    @property
    def lazy_hooks(self) -> Sequence[LazyHook]:
        return tuple(self._lazy_hooks)

    @property
    def num_variables(self) -> int:
        return len(self._variables)

    @property
    def num_constraints(self) -> int:
        return len(self._constraints)

    def variable(self, var_id: int) -> Variable:
        return self._variables[var_id]

    def integer_ids(self) -> list[int]:
        return [v.id for v in self._variables if v.is_integer]

    def constraints_tagged(self, tag: str) -> list[Constraint]:
        """Rows whose full tag or family equals `tag`."""
        return [c for c in self._constraints if c.tag == tag or c.family == tag]

    def tag_counts(self) -> Counter:
        """Number of rows per family."""
        return Counter(c.family for c in self._constraints)

    # -- evaluation ------------------------------------------------------

    def evaluate(self, assignment: Mapping[int, float]) -> float:
        """Objective value of an assignment (missing ids count as 0)."""
        return sum(v.obj * assignment.get(v.id, 0.0) for v in self._variables if v.obj)

    def check_assignment(self, assignment: Mapping[int, float], tol: float = 1e-6) -> list[Violation]:
        """
        Replay every bound, integrality mark and row against an assignment.

        Returns:
            Violations in declaration order (empty when feasible)
        """
        violations = []
        for var in self._variables:
            value = assignment.get(var.id, 0.0)
            if value < var.lower - tol:
                violations.append(Violation(f"bounds[{var.name}]", value, ">=", var.lower))
            elif value > var.upper + tol:
                violations.append(Violation(f"bounds[{var.name}]", value, "<=", var.upper))
            elif var.is_integer and abs(value - round(value)) > tol:
                violations.append(Violation(f"integrality[{var.name}]", value, "=", round(value)))
        for constraint in self._constraints:
            if constraint.violation(assignment) > tol * max(1.0, abs(constraint.rhs)):
                violations.append(Violation(
                    constraint.tag, constraint.lhs(assignment), constraint.sense.value, constraint.rhs
                ))
        return violations

    # -- views and exports -----------------------------------------------

    def relax_to_lp(self) -> "Model":
        """A frozen copy with every integrality mark dropped and bounds kept."""
        relaxed = Model(self.name if self.name.endswith("[lp]") else f"{self.name}[lp]")
        relaxed._variables = [
            Variable(v.id, v.name, VarKind.CONTINUOUS, v.lower, v.upper, v.obj, v.priority)
            for v in self._variables
        ]
        relaxed._constraints = list(self._constraints)
        relaxed._lazy_hooks = list(self._lazy_hooks)
        return relaxed.freeze()

    def to_arrays(self) -> LPArrays:
        """Dense arrays of the model (cached once frozen)."""
        if self._arrays is not None:
            return self._arrays
        n, m = len(self._variables), len(self._constraints)
        A = np.zeros((m, n))
        for r, constraint in enumerate(self._constraints):
            for var, coef in constraint.coeffs.items():
                A[r, var] = coef
        arrays = LPArrays(
            c=np.array([v.obj for v in self._variables], dtype=float),
            A=A,
            senses=[c.sense for c in self._constraints],
            b=np.array([c.rhs for c in self._constraints], dtype=float),
            lower=np.array([v.lower for v in self._variables], dtype=float),
            upper=np.array([v.upper for v in self._variables], dtype=float),
            integer=np.array([v.is_integer for v in self._variables], dtype=bool),
            priority=np.array([v.priority for v in self._variables], dtype=int),
            tags=[c.tag for c in self._constraints],
        )
        if self._frozen:
            self._arrays = arrays
        return arrays

    def to_lp_text(self) -> str:
        """
        Export in CPLEX LP format.

        Variables are written as `v<id>`; each row is preceded by a
        backslash comment with its tag, and the symbolic names are listed
        in a trailing comment block.
        """
        def term(coef: float, var: int, first: bool) -> str:
            sign = "-" if coef < 0 else ("" if first else "+")
            magnitude = abs(coef)
            body = f"v{var}" if magnitude == 1 else f"{magnitude:.12g} v{var}"
            return f"{sign} {body}".strip() if first else f"{sign} {body}"

        lines = [f"\\ {self.name}", "Minimize"]
        objective = [(v.obj, v.id) for v in self._variables if v.obj]
        if objective:
            terms = [term(coef, var, i == 0) for i, (coef, var) in enumerate(objective)]
            lines.append(" obj: " + " ".join(terms))
        else:
            lines.append(" obj: 0 v0" if self._variables else " obj:")
        lines.append("Subject To")
        for constraint in self._constraints:
            lines.append(f" \\ {constraint.tag}")
            terms = [term(coef, var, i == 0) for i, (var, coef) in enumerate(constraint.coeffs.items())]
            lines.append(f" c{constraint.id}: {' '.join(terms)} {constraint.sense.value} {constraint.rhs:.12g}")
        lines.append("Bounds")
        for var in self._variables:
            if var.is_integer:
                continue
            upper = "+inf" if var.upper == float("inf") else f"{var.upper:.12g}"
            lines.append(f" {var.lower:.12g} <= v{var.id} <= {upper}")
        binaries = [f"v{v.id}" for v in self._variables if v.is_integer]
        if binaries:
            lines.append("Binaries")
            for start in range(0, len(binaries), 10):
                lines.append(" " + " ".join(binaries[start:start + 10]))
        lines.append("End")
        lines.append("\\ names")
        for var in self._variables:
            lines.append(f"\\ v{var.id} = {var.name}")
        return "\n".join(lines) + "\n"


def relax_to_lp(model: Model) -> Model:
    """Function form of `Model.relax_to_lp`."""
    return model.relax_to_lp()


def assignment_from_values(values: Iterable[float]) -> Assignment:
    """Dense value vector -> Assignment."""
    return {i: float(v) for i, v in enumerate(values)}
