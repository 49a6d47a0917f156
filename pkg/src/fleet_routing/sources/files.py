"""
Directory-of-documents source.
[CTX:PBI-1:1-1:INSTANCE]
"""
import logging
from collections.abc import Iterator
from pathlib import Path

from fleet_routing.core.source import InstanceSource, NamedInstance
from fleet_routing.instance import InstanceValidationError, fleet_from_document, load_instance

logger = logging.getLogger(__name__)


class DirectorySource(InstanceSource):
    """Yields every `*.json` instance document of a directory, sorted by file name."""

    def __init__(self, path: Path | str):
        self.path = Path(path)

    @property
    def name(self) -> str:
        return "directory"

    def instances(self) -> Iterator[NamedInstance]:
        if not self.path.is_dir():
            raise InstanceValidationError(f"Instance directory not found: {self.path}")
        for file in sorted(self.path.glob("*.json")):
            inst = load_instance(file.read_text())
            logger.debug(f"[CTX:PBI-1:1-1:INSTANCE] Loaded {file.name}")
            yield NamedInstance(
                name=file.stem,
                instance=inst,
                fleet=fleet_from_document(inst),
                metadata={"path": str(file)},
            )
