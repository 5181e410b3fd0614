"""Latent injection, length regulation and the mel decoder."""

import logging
from dataclasses import dataclass

import torch
from torch import nn

from src.audio.frontend import AudioConfig, MelSpectrogram
from src.model.cu_embedding import CUHidden
from src.model.layers import FFTStack
from src.utils.errors import ModelInputError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoderConfig:
    n_blocks: int = 4
    d_model: int = 256
    n_heads: int = 2
    conv_kernel: int = 9
    n_mels: int = 80
    ffn_dim: int = 1024
    dropout: float = 0.1

    def __post_init__(self):
        if self.n_mels != 80:
            raise ModelInputError(f"decoder emits 80 mel bins, got n_mels={self.n_mels}")
        if self.n_blocks < 1:
            raise ModelInputError("decoder needs at least one block")


class LatentProjection(nn.Module):
    def __init__(self, latent_dim: int = 2, d_model: int = 256):
        super().__init__()
        self.up = nn.Linear(latent_dim, d_model, bias=False)

    def forward(self, hidden: CUHidden, z: torch.Tensor) -> torch.Tensor:
        h = hidden.h if isinstance(hidden, CUHidden) else hidden
        if z.dim() != 2 or z.shape[0] != h.shape[0]:
            raise ModelInputError(f"z {tuple(z.shape)} does not match {h.shape[0]} phonemes")
        return h + self.up(z)


def inject_latent(projection: LatentProjection, hidden: CUHidden, z: torch.Tensor) -> torch.Tensor:
    return projection(hidden, z)


def length_regulate(sequence: torch.Tensor, durations) -> torch.Tensor:
    """Repeats row t of ``sequence`` ``durations[t]`` times."""
    durations = torch.as_tensor(durations, dtype=torch.long, device=sequence.device)
    if durations.dim() != 1 or durations.shape[0] != sequence.shape[0]:
        raise ModelInputError(
            f"{tuple(durations.shape)} durations for {sequence.shape[0]} phonemes"
        )
    if bool((durations < 0).any()):
        raise ModelInputError("durations must be non-negative")
    return torch.repeat_interleave(sequence, durations, dim=0)


class MelDecoder(nn.Module):
    def __init__(self, config: DecoderConfig = DecoderConfig()):
        super().__init__()
        self.config = config
        self.stack = FFTStack(
            config.n_blocks,
            config.d_model,
            config.n_heads,
            config.ffn_dim,
            config.conv_kernel,
            config.dropout,
        )
        self.mel_linear = nn.Linear(config.d_model, config.n_mels)

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        if frames.dim() != 2 or frames.shape[0] == 0:
            raise ModelInputError(f"decoder needs at least one frame, got shape {tuple(frames.shape)}")
        return self.mel_linear(self.stack(frames))


@torch.no_grad()
def decode_mel(
    decoder: MelDecoder, frames: torch.Tensor, audio: AudioConfig = AudioConfig()
) -> MelSpectrogram:
    return MelSpectrogram(decoder(frames).double().cpu().numpy(), audio)
