"""
Configuration loader and validator for solver, heuristic and harness settings.
[CTX:PBI-0:0-2:CFG]
"""
import copy
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .errors import FleetRoutingError


LP_BACKENDS = ("auto", "simplex", "highs")

# Default configuration used as fallback
DEFAULT_CONFIG = {
    "solver": {
        "time_limit_s": 900,
        "rel_gap_target": 1e-6,
        "int_tol": 1e-6,
        "feas_tol": 1e-7,
        "lp_backend": "auto",
        "max_nodes": None,
        "heuristic_start": True,
        "priorities": {
            "usage": 100,
            "type": 50,
            "arc": 0,
        },
    },
    "instance": {
        "scale": 1,
        "fleet_slack": 1,
        "cluster_radius": 0.0,
    },
    "warmstart": {
        "budget_s": 60,
        "destroy_fraction": 0.3,
        "max_iterations": None,
        "operators": {
            "random": 1.0,
            "worst": 1.0,
            "segment": 1.0,
        },
    },
    "harness": {
        "time_limit_s": 900,
        "max_concurrency": 1,
        "budgets": [0, 30, 60, 120, 300, 600, 900],
        "variants": ["sc:full", "sv:full", "fc:full", "ff:full"],
    },
}


class ConfigValidationError(FleetRoutingError):
    """Raised when configuration validation fails."""
    pass


class SolverSettings:
    """Branch-and-bound and LP engine settings."""

    def __init__(
        self,
        time_limit_s: float = 900,
        rel_gap_target: float = 1e-6,
        int_tol: float = 1e-6,
        feas_tol: float = 1e-7,
        lp_backend: str = "auto",
        max_nodes: Optional[int] = None,
        priorities: Optional[Dict[str, int]] = None,
        heuristic_start: bool = True,
    ):
        self.time_limit_s = time_limit_s
        self.rel_gap_target = rel_gap_target
        self.int_tol = int_tol
        self.feas_tol = feas_tol
        self.lp_backend = lp_backend
        self.max_nodes = max_nodes
        self.priorities = priorities or {"usage": 100, "type": 50, "arc": 0}
        self.heuristic_start = heuristic_start

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverSettings":
        """Create SolverSettings from dictionary."""
        defaults = DEFAULT_CONFIG["solver"]
        priorities = dict(defaults["priorities"])
        priorities.update(data.get("priorities") or {})
        return cls(
            time_limit_s=data.get("time_limit_s", defaults["time_limit_s"]),
            rel_gap_target=data.get("rel_gap_target", defaults["rel_gap_target"]),
            int_tol=data.get("int_tol", defaults["int_tol"]),
            feas_tol=data.get("feas_tol", defaults["feas_tol"]),
            lp_backend=data.get("lp_backend", defaults["lp_backend"]),
            max_nodes=data.get("max_nodes", defaults["max_nodes"]),
            priorities=priorities,
            heuristic_start=data.get("heuristic_start", defaults["heuristic_start"]),
        )

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary representation."""
        return {
            "time_limit_s": self.time_limit_s,
            "rel_gap_target": self.rel_gap_target,
            "int_tol": self.int_tol,
            "feas_tol": self.feas_tol,
            "lp_backend": self.lp_backend,
            "max_nodes": self.max_nodes,
            "priorities": dict(self.priorities),
            "heuristic_start": self.heuristic_start,
        }


class InstanceSettings:
    """Quantity scale, fleet sizing slack and clustering radius."""

    def __init__(self, scale: int = 1, fleet_slack: int = 1, cluster_radius: float = 0.0):
        self.scale = scale
        self.fleet_slack = fleet_slack
        self.cluster_radius = cluster_radius

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "InstanceSettings":
        defaults = DEFAULT_CONFIG["instance"]
        return cls(
            scale=data.get("scale", defaults["scale"]),
            fleet_slack=data.get("fleet_slack", defaults["fleet_slack"]),
            cluster_radius=data.get("cluster_radius", defaults["cluster_radius"]),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scale": self.scale,
            "fleet_slack": self.fleet_slack,
            "cluster_radius": self.cluster_radius,
        }


class WarmstartSettings:
    """Budget and operator mix of the construction + LNS heuristic."""

    def __init__(
        self,
        budget_s: float = 60,
        destroy_fraction: float = 0.3,
        max_iterations: Optional[int] = None,
        operators: Optional[Dict[str, float]] = None,
    ):
        self.budget_s = budget_s
        self.destroy_fraction = destroy_fraction
        self.max_iterations = max_iterations
        self.operators = operators or {"random": 1.0, "worst": 1.0, "segment": 1.0}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "WarmstartSettings":
        defaults = DEFAULT_CONFIG["warmstart"]
        return cls(
            budget_s=data.get("budget_s", defaults["budget_s"]),
            destroy_fraction=data.get("destroy_fraction", defaults["destroy_fraction"]),
            max_iterations=data.get("max_iterations", defaults["max_iterations"]),
            operators=data.get("operators") or dict(defaults["operators"]),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "budget_s": self.budget_s,
            "destroy_fraction": self.destroy_fraction,
            "max_iterations": self.max_iterations,
            "operators": dict(self.operators),
        }


class HarnessSettings:
    """Experiment-runner defaults."""

    def __init__(
        self,
        time_limit_s: float = 900,
        max_concurrency: int = 1,
        budgets: Optional[List[float]] = None,
        variants: Optional[List[str]] = None,
    ):
        self.time_limit_s = time_limit_s
        self.max_concurrency = max_concurrency
        self.budgets = budgets if budgets is not None else list(DEFAULT_CONFIG["harness"]["budgets"])
        self.variants = variants if variants is not None else list(DEFAULT_CONFIG["harness"]["variants"])

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HarnessSettings":
        defaults = DEFAULT_CONFIG["harness"]
        return cls(
            time_limit_s=data.get("time_limit_s", defaults["time_limit_s"]),
            max_concurrency=data.get("max_concurrency", defaults["max_concurrency"]),
            budgets=data.get("budgets", list(defaults["budgets"])),
            variants=data.get("variants", list(defaults["variants"])),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time_limit_s": self.time_limit_s,
            "max_concurrency": self.max_concurrency,
            "budgets": list(self.budgets),
            "variants": list(self.variants),
        }


class ToolkitConfig:
    """Main configuration container."""

    def __init__(
        self,
        solver: Optional[SolverSettings] = None,
        instance: Optional[InstanceSettings] = None,
        warmstart: Optional[WarmstartSettings] = None,
        harness: Optional[HarnessSettings] = None,
    ):
        self.solver = solver or SolverSettings()
        self.instance = instance or InstanceSettings()
        self.warmstart = warmstart or WarmstartSettings()
        self.harness = harness or HarnessSettings()

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ToolkitConfig":
        """Create ToolkitConfig from dictionary; missing sections take defaults."""
        return cls(
            solver=SolverSettings.from_dict(data.get("solver") or {}),
            instance=InstanceSettings.from_dict(data.get("instance") or {}),
            warmstart=WarmstartSettings.from_dict(data.get("warmstart") or {}),
            harness=HarnessSettings.from_dict(data.get("harness") or {}),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "solver": self.solver.to_dict(),
            "instance": self.instance.to_dict(),
            "warmstart": self.warmstart.to_dict(),
            "harness": self.harness.to_dict(),
        }


def _require_positive(section: str, data: Dict[str, Any], field: str, allow_zero: bool = False) -> None:
    if field not in data or data[field] is None:
        return
    value = data[field]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigValidationError(f"'{section}.{field}' must be a number")
    if value < 0 or (value == 0 and not allow_zero):
        qualifier = "non-negative" if allow_zero else "positive"
        raise ConfigValidationError(f"'{section}.{field}' must be a {qualifier} number")


def validate_config(config_data: Dict[str, Any]) -> None:
    """
    Validate configuration data structure.

    Raises:
        ConfigValidationError: If validation fails
    """
    if not isinstance(config_data, dict):
        raise ConfigValidationError("Config must be a dictionary")

    unknown = set(config_data) - set(DEFAULT_CONFIG)
    if unknown:
        raise ConfigValidationError(f"Unknown config sections: {sorted(unknown)}")

    for section, section_data in config_data.items():
        if section_data is None:
            continue
        if not isinstance(section_data, dict):
            raise ConfigValidationError(f"Section '{section}' must be a dictionary")
        unknown_keys = set(section_data) - set(DEFAULT_CONFIG[section])
        if unknown_keys:
            raise ConfigValidationError(
                f"Section '{section}' has unknown keys: {sorted(unknown_keys)}"
            )

    solver = config_data.get("solver") or {}
    for field in ["time_limit_s", "rel_gap_target", "int_tol", "feas_tol", "max_nodes"]:
        _require_positive("solver", solver, field)
    if "lp_backend" in solver and solver["lp_backend"] not in LP_BACKENDS:
        raise ConfigValidationError(
            f"'solver.lp_backend' must be one of {list(LP_BACKENDS)}, got {solver['lp_backend']!r}"
        )
    if "heuristic_start" in solver and not isinstance(solver["heuristic_start"], bool):
        raise ConfigValidationError("'solver.heuristic_start' must be true or false")
    if "priorities" in solver:
        priorities = solver["priorities"]
        if not isinstance(priorities, dict):
            raise ConfigValidationError("'solver.priorities' must be a dictionary")
        for name, value in priorities.items():
            if name not in ("usage", "type", "arc"):
                raise ConfigValidationError(f"Unknown branching priority class '{name}'")
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigValidationError(f"Branching priority '{name}' must be an integer")

    instance = config_data.get("instance") or {}
    _require_positive("instance", instance, "scale")
    _require_positive("instance", instance, "fleet_slack", allow_zero=True)
    _require_positive("instance", instance, "cluster_radius", allow_zero=True)

    warmstart = config_data.get("warmstart") or {}
    _require_positive("warmstart", warmstart, "budget_s", allow_zero=True)
    _require_positive("warmstart", warmstart, "max_iterations", allow_zero=True)
    if "destroy_fraction" in warmstart:
        fraction = warmstart["destroy_fraction"]
        if not isinstance(fraction, (int, float)) or not 0 < fraction <= 1:
            raise ConfigValidationError("'warmstart.destroy_fraction' must be in (0, 1]")
    if "operators" in warmstart:
        operators = warmstart["operators"]
        if not isinstance(operators, dict) or not operators:
            raise ConfigValidationError("'warmstart.operators' must be a non-empty dictionary")
        for name, weight in operators.items():
            if name not in ("random", "worst", "segment"):
                raise ConfigValidationError(f"Unknown destroy operator '{name}'")
            if not isinstance(weight, (int, float)) or weight < 0:
                raise ConfigValidationError(f"Operator weight '{name}' must be non-negative")

    harness = config_data.get("harness") or {}
    _require_positive("harness", harness, "time_limit_s")
    _require_positive("harness", harness, "max_concurrency")
    if "budgets" in harness:
        budgets = harness["budgets"]
        if not isinstance(budgets, list) or any(
            not isinstance(b, (int, float)) or b < 0 for b in budgets
        ):
            raise ConfigValidationError("'harness.budgets' must be a list of non-negative numbers")
    if "variants" in harness:
        variants = harness["variants"]
        if not isinstance(variants, list) or not all(isinstance(v, str) for v in variants):
            raise ConfigValidationError("'harness.variants' must be a list of strings")


def load_config(config_path: Optional[Path] = None) -> ToolkitConfig:
    """
    Load and validate configuration from YAML file.

    Args:
        config_path: Path to config file. If None, uses default location.

    Returns:
        ToolkitConfig instance

    Raises:
        ConfigValidationError: If validation fails
    """
    if config_path is None:
        # Default to config/solver.yml in project root
        config_path = Path(__file__).parent.parent.parent.parent / "config" / "solver.yml"

    try:
        with open(config_path, "r") as f:
            config_data = yaml.safe_load(f)
    except FileNotFoundError:
        # Return default config if file not found
        return get_default_config()
    except yaml.YAMLError as e:
        raise ConfigValidationError(f"Invalid YAML in config file: {e}")

    if config_data is None:
        return get_default_config()

    validate_config(config_data)

    return ToolkitConfig.from_dict(config_data)


def get_default_config() -> ToolkitConfig:
    """Get default configuration."""
    return ToolkitConfig.from_dict(copy.deepcopy(DEFAULT_CONFIG))
