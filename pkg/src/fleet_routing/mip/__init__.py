"""MIP intermediate representation."""

from fleet_routing.mip.model import (
    PLUMBING,
    Assignment,
    Constraint,
    LazyCut,
    LazyHook,
    LPArrays,
    Model,
    ModelBuildError,
    ModelFrozenError,
    Sense,
    Variable,
    VarKind,
    Violation,
    family_of,
    relax_to_lp,
)

__all__ = [
    "PLUMBING",
    "Assignment",
    "Constraint",
    "LazyCut",
    "LazyHook",
    "LPArrays",
    "Model",
    "ModelBuildError",
    "ModelFrozenError",
    "Sense",
    "Variable",
    "VarKind",
    "Violation",
    "family_of",
    "relax_to_lp",
]
