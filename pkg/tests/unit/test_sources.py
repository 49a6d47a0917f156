"""
Unit tests for the InstanceSource interface and its implementations.
"""
# [CTX:PBI-0:0-1:TESTS]

import pytest

from fleet_routing.core.source import InstanceSource, NamedInstance
from fleet_routing.instance import InstanceValidationError, save_instance
from fleet_routing.sources import DirectorySource, GeneratedSource


class TestInstanceSourceInterface:
    """Tests for the abstract base class."""

    def test_cannot_instantiate_abstract(self):
        """Test InstanceSource cannot be instantiated directly."""
        with pytest.raises(TypeError):
            InstanceSource()

    def test_incomplete_subclass_fails(self):
        """Test a subclass missing instances() cannot be instantiated."""
        class Incomplete(InstanceSource):
            @property
            def name(self) -> str:
                return "incomplete"

        with pytest.raises(TypeError):
            Incomplete()

    def test_metadata_default_factory(self, line_instance):
        """Test metadata dicts are independent per instance."""
        a = NamedInstance(name="a", instance=line_instance)
        b = NamedInstance(name="b", instance=line_instance)

        a.metadata["seed"] = 1

        assert "seed" not in b.metadata
        assert a.fleet is None


class TestGeneratedSource:
    """Tests for the seeded generator source."""

    def test_one_instance_per_seed(self):
        """Test names carry the profile, size and seed."""
        source = GeneratedSource(seeds=[1, 2], n_customers=4)

        named = list(source.instances())

        assert source.name == "generated"
        assert [n.name for n in named] == ["standard-4-s1", "standard-4-s2"]
        assert named[0].metadata["seed"] == 1
        assert named[0].instance.n_customers == 4

    def test_deterministic(self):
        """Test two passes yield equal instances."""
        source = GeneratedSource(seeds=[5], n_customers=6, n_commodities=1, profile="single-type")

        first = [n.instance for n in source.instances()]
        second = [n.instance for n in source.instances()]

        assert first == second

    def test_target_customers_aggregates(self):
        """Test a target count shrinks the instance by clustering."""
        source = GeneratedSource(seeds=[3], n_customers=12, n_commodities=1, profile="single-type", target_customers=5)

        (named,) = list(source.instances())

        assert named.instance.n_customers <= 5
        assert named.metadata["radius"] > 0


class TestDirectorySource:
    """Tests for the directory-of-documents source."""

    def test_sorted_by_file_name(self, tmp_path, line_instance, split_instance):
        """Test documents are yielded in file-name order."""
        (tmp_path / "b.json").write_text(save_instance(line_instance))
        (tmp_path / "a.json").write_text(save_instance(split_instance))
        (tmp_path / "notes.txt").write_text("ignored")

        named = list(DirectorySource(tmp_path).instances())

        assert [n.name for n in named] == ["a", "b"]
        assert named[1].instance == line_instance
        assert named[0].metadata["path"].endswith("a.json")

    def test_fleet_block(self, tmp_path):
        """Test a document's fleet block becomes the named fleet."""
        (tmp_path / "fleet.json").write_text(
            '{"depot": {"x": 0, "y": 0}, "commodities": ["general"],'
            ' "vehicle_types": [{"id": "truck", "capacity": 10, "cost_per_km": 1, "compatible": ["general"]}],'
            ' "customers": [{"id": 1, "x": 1, "y": 0, "demand": {"general": 3}}],'
            ' "fleet": {"mode": "stable", "counts": {"truck": 1}}}'
        )

        (named,) = list(DirectorySource(tmp_path).instances())

        assert named.fleet is not None
        assert named.fleet.pools == {"truck": 1}

    def test_missing_directory(self, tmp_path):
        """Test a missing directory raises a validation error."""
        with pytest.raises(InstanceValidationError, match="not found"):
            list(DirectorySource(tmp_path / "nope").instances())
