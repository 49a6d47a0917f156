"""Instance source implementations."""

from fleet_routing.sources.files import DirectorySource
from fleet_routing.sources.generated import GeneratedSource

__all__ = ["DirectorySource", "GeneratedSource"]
