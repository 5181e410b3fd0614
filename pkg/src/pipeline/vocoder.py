import logging
from pathlib import Path
from typing import Optional, Protocol, Union

import numpy as np
import torch

from src.audio.frontend import MelSpectrogram, mel_to_wav_fallback
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)


class Vocoder(Protocol):
    def __call__(self, mel: MelSpectrogram) -> np.ndarray: ...


class GriffinLimVocoder:
    def __init__(self, iterations: int = 60):
        self.iterations = iterations

    def __call__(self, mel: MelSpectrogram) -> np.ndarray:
        return mel_to_wav_fallback(mel, iterations=self.iterations)


class TorchScriptVocoder:
    """External neural vocoder exported with TorchScript.

    The module takes a ``[1, n_mels, n_frames]`` log-mel and returns samples
    shaped ``[n_samples]`` or ``[1, ..., n_samples]``.
    """

    def __init__(self, path: Union[str, Path]):
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"vocoder not found: {path}")
        self.module = torch.jit.load(str(path), map_location="cpu")
        self.module.eval()

    @torch.no_grad()
    def __call__(self, mel: MelSpectrogram) -> np.ndarray:
        frames = torch.as_tensor(mel.frames.T, dtype=torch.float32).unsqueeze(0)
        return self.module(frames).reshape(-1).double().numpy()


def build_vocoder(path: Optional[Union[str, Path]] = None) -> Vocoder:
    if path:
        logger.info(f"Using TorchScript vocoder {path}")
        return TorchScriptVocoder(path)
    return GriffinLimVocoder()
