"""
InstanceSource interface and supporting types.

An instance source yields the named instances a benchmark or sweep runs on.
Each source decides where the instances come from (seeded generator, a
directory of documents, ...).
"""
# [CTX:PBI-0:0-1:IFACE]

from abc import ABC, abstractmethod
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

if TYPE_CHECKING:
    from fleet_routing.instance import Fleet, Instance


@dataclass
class NamedInstance:
    """
    An instance as handed to the harness.

    Attributes:
        name: Row identifier in reports
        instance: The problem instance
        fleet: Explicit fleet (from the document's fleet block), if any
        metadata: Provenance (seed, profile, path, ...)
    """
    name: str
    instance: "Instance"
    fleet: Optional["Fleet"] = None
    metadata: dict[str, Any] = field(default_factory=dict)


class InstanceSource(ABC):
    """
    Abstract base class for all instance sources.

    Subclasses must yield instances in a stable order so benchmark reports
    are reproducible.
    """

    @property
    @abstractmethod
    def name(self) -> str:
        """
        Unique identifier for this source.

        Returns:
            The name of the source (e.g., "generated", "directory")
        """
        pass

    @abstractmethod
    def instances(self) -> Iterator[NamedInstance]:
        """
        Iterate over the instances of this source.

        Yields:
            NamedInstance objects in a deterministic order
        """
        pass
