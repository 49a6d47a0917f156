"""
Integrality gap arithmetic.
[CTX:PBI-3:3-4:GAP]
"""
import math
from typing import Optional

GAP_EPSILON = 1e-9


def compute_gap(incumbent_obj: float, bound: Optional[float]) -> float:
    """
    Relative gap (incumbent − bound) / max(|incumbent|, ε), as a fraction.

    A missing or infinite bound gives an infinite gap.
    """
    if bound is None or not math.isfinite(bound):
        return math.inf
    return max(0.0, incumbent_obj - bound) / max(abs(incumbent_obj), GAP_EPSILON)


def root_gap(best_known: float, root_bound: float) -> float:
    """Root relaxation gap (best − bound) / bound; exceeds 1 when the bound is weak."""
    return max(0.0, best_known - root_bound) / max(abs(root_bound), GAP_EPSILON)


def format_percent(fraction: float, digits: int = 2) -> str:
    if math.isinf(fraction):
        return "inf"
    return f"{fraction * 100:.{digits}f}"
