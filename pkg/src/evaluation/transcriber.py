from pathlib import Path
from typing import Protocol, Union

from src.utils.errors import MetricError


class Transcriber(Protocol):
    def transcribe(self, audio_path: Union[str, Path]) -> str: ...


class SidecarTranscriber:
    """Reads the hypothesis an external ASR wrote next to the audio as ``<audio>.txt``."""

    suffix = ".txt"

    def transcribe(self, audio_path: Union[str, Path]) -> str:
        path = Path(audio_path)
        sidecar = path.with_name(path.name + self.suffix)
        if not sidecar.exists():
            raise MetricError(f"no transcript found for {path} (expected {sidecar})")
        return sidecar.read_text(encoding="utf-8").strip()
