"""Exception hierarchy shared by every package under ``src``."""

from pathlib import Path
from typing import Optional, Union


class CucVaeError(Exception):
    """Base class; the CLI turns these into exit code 1."""


class ConfigError(CucVaeError):
    pass


class CorpusError(CucVaeError):
    """Ingestion failure, optionally located at ``path:line``."""

    def __init__(
        self,
        message: str,
        path: Optional[Union[str, Path]] = None,
        line: Optional[int] = None,
    ):
        self.path = str(path) if path is not None else None
        self.line = line
        location = ""
        if self.path is not None:
            location = self.path if line is None else f"{self.path}:{line}"
            location = f"{location}: "
        super().__init__(f"{location}{message}")


class ManifestError(CorpusError):
    pass


class AlignmentError(CorpusError):
    pass


class EditScriptError(CorpusError):
    pass


class AudioError(CucVaeError):
    pass


class ModelInputError(CucVaeError):
    pass


class EditError(CucVaeError):
    pass


class MetricError(CucVaeError):
    pass


class CheckpointError(CucVaeError):
    pass


class TrainingDivergedError(CucVaeError):
    """Raised on a non-finite loss; the last good checkpoint stays on disk."""

    def __init__(self, step: int, last_checkpoint: Optional[Path]):
        self.step = step
        self.last_checkpoint = last_checkpoint
        super().__init__(
            f"non-finite loss at step {step}; last good checkpoint: {last_checkpoint}"
        )
