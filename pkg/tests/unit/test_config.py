"""
Unit tests for configuration loading and validation.
[CTX:PBI-0:0-2:CFG]

Tests cover:
- Typed settings with defaults, from_dict and to_dict
- Validation errors for invalid configs
- Fallback to defaults when config is missing
- The shipped config/solver.yml
"""
import tempfile
from pathlib import Path

import pytest
import yaml

from fleet_routing.core.config import (
    DEFAULT_CONFIG,
    ConfigValidationError,
    HarnessSettings,
    SolverSettings,
    ToolkitConfig,
    WarmstartSettings,
    get_default_config,
    load_config,
    validate_config,
)


class TestSolverSettings:
    """Test SolverSettings class."""

    def test_create_with_defaults(self):
        """Test defaults mirror the 15-minute protocol."""
        settings = SolverSettings()

        assert settings.time_limit_s == 900
        assert settings.rel_gap_target == 1e-6
        assert settings.lp_backend == "auto"
        assert settings.max_nodes is None
        assert settings.heuristic_start is True
        assert settings.priorities == {"usage": 100, "type": 50, "arc": 0}

    def test_from_dict_merges_priorities(self):
        """Test partial priorities keep the other classes' defaults."""
        settings = SolverSettings.from_dict({"time_limit_s": 10, "priorities": {"arc": 5}})

        assert settings.time_limit_s == 10
        assert settings.priorities == {"usage": 100, "type": 50, "arc": 5}

    def test_to_dict_round_trip(self):
        """Test to_dict feeds back into from_dict unchanged."""
        settings = SolverSettings(time_limit_s=30, lp_backend="highs", max_nodes=500)

        again = SolverSettings.from_dict(settings.to_dict())

        assert again.to_dict() == settings.to_dict()


class TestWarmstartSettings:
    """Test WarmstartSettings class."""

    def test_defaults(self):
        """Test default destroy share and operator weights."""
        settings = WarmstartSettings()

        assert settings.budget_s == 60
        assert settings.destroy_fraction == 0.3
        assert settings.operators == {"random": 1.0, "worst": 1.0, "segment": 1.0}

    def test_from_dict_missing_fields(self):
        """Test from_dict uses defaults for missing fields."""
        settings = WarmstartSettings.from_dict({"max_iterations": 7})

        assert settings.max_iterations == 7
        assert settings.destroy_fraction == 0.3


class TestHarnessSettings:
    """Test HarnessSettings class."""

    def test_default_budgets_are_a_copy(self):
        """Test mutating one settings object leaves the defaults alone."""
        settings = HarnessSettings()
        settings.budgets.append(12345)

        assert 12345 not in DEFAULT_CONFIG["harness"]["budgets"]
        assert 12345 not in HarnessSettings().budgets


class TestValidateConfig:
    """Test configuration validation."""

    def test_valid_config(self):
        """Test validation passes for the default config."""
        validate_config(DEFAULT_CONFIG)

    def test_not_dict(self):
        """Test validation fails if config is not a dictionary."""
        with pytest.raises(ConfigValidationError, match="must be a dictionary"):
            validate_config("not a dict")

    def test_unknown_section(self):
        """Test validation fails for an unknown section."""
        with pytest.raises(ConfigValidationError, match="Unknown config sections"):
            validate_config({"plotting": {}})

    def test_unknown_key(self):
        """Test validation fails for an unknown key inside a section."""
        with pytest.raises(ConfigValidationError, match="unknown keys"):
            validate_config({"solver": {"threads": 4}})

    def test_non_positive_time_limit(self):
        """Test validation fails for a zero time limit."""
        with pytest.raises(ConfigValidationError, match="solver.time_limit_s"):
            validate_config({"solver": {"time_limit_s": 0}})

    def test_unknown_backend(self):
        """Test validation fails for an unknown LP backend."""
        with pytest.raises(ConfigValidationError, match="lp_backend"):
            validate_config({"solver": {"lp_backend": "gurobi"}})

    def test_heuristic_start_must_be_boolean(self):
        with pytest.raises(ConfigValidationError, match="heuristic_start"):
            validate_config({"solver": {"heuristic_start": "yes"}})

    def test_unknown_priority_class(self):
        """Test validation fails for an unknown branching class."""
        with pytest.raises(ConfigValidationError, match="priority class"):
            validate_config({"solver": {"priorities": {"flow": 1}}})

    def test_destroy_fraction_range(self):
        """Test validation fails for a destroy fraction outside (0, 1]."""
        with pytest.raises(ConfigValidationError, match="destroy_fraction"):
            validate_config({"warmstart": {"destroy_fraction": 1.5}})

    def test_unknown_operator(self):
        """Test validation fails for an unknown destroy operator."""
        with pytest.raises(ConfigValidationError, match="destroy operator"):
            validate_config({"warmstart": {"operators": {"shaw": 1.0}}})

    def test_zero_budget_allowed(self):
        """Test a zero warm-start budget is valid (first feasible solution only)."""
        validate_config({"warmstart": {"budget_s": 0}})

    def test_negative_budgets(self):
        """Test validation fails for negative sweep budgets."""
        with pytest.raises(ConfigValidationError, match="budgets"):
            validate_config({"harness": {"budgets": [0, -5]}})


class TestLoadConfig:
    """Test configuration loading."""

    def test_load_valid_config_file(self):
        """Test loading a valid config file."""
        config_data = {
            "solver": {"time_limit_s": 30, "lp_backend": "highs"},
            "harness": {"max_concurrency": 2, "variants": ["sc:base"]},
        }

        with tempfile.NamedTemporaryFile(mode="w", suffix=".yml", delete=False) as f:
            yaml.dump(config_data, f)
            temp_path = Path(f.name)

        try:
            config = load_config(temp_path)

            assert isinstance(config, ToolkitConfig)
            assert config.solver.time_limit_s == 30
            assert config.solver.lp_backend == "highs"
            assert config.harness.max_concurrency == 2
            assert config.harness.variants == ["sc:base"]
            assert config.warmstart.budget_s == 60
        finally:
            temp_path.unlink()

    def test_load_missing_file_returns_default(self):
        """Test loading non-existent file returns default config."""
        config = load_config(Path("/tmp/nonexistent_fleet_routing_config_123456.yml"))

        assert config.to_dict() == get_default_config().to_dict()

    def test_load_invalid_yaml(self):
        """Test loading invalid YAML raises error."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yml", delete=False) as f:
            f.write("invalid: yaml: content:\n  - bad indentation")
            temp_path = Path(f.name)

        try:
            with pytest.raises(ConfigValidationError, match="Invalid YAML"):
                load_config(temp_path)
        finally:
            temp_path.unlink()

    def test_load_empty_file_returns_default(self):
        """Test an empty file behaves like a missing one."""
        with tempfile.NamedTemporaryFile(mode="w", suffix=".yml", delete=False) as f:
            temp_path = Path(f.name)

        try:
            assert load_config(temp_path).to_dict() == get_default_config().to_dict()
        finally:
            temp_path.unlink()

    def test_shipped_config_is_valid(self):
        """Test config/solver.yml loads and matches the defaults."""
        path = Path(__file__).parent.parent.parent / "config" / "solver.yml"

        config = load_config(path)

        assert config.solver.time_limit_s == 900
        assert config.harness.variants == ["sc:full", "sv:full", "fc:full", "ff:full"]
