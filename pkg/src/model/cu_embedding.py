"""Cross-utterance (CU) embedding.

phonemes + speaker -> mixture encodings F (Transformer encoder)
neighbor pairs -> B (frozen sentence encoder), fused into G by attention
[G, F] -> H (linear projection) -> log-durations (variance predictor)

All modules work on one utterance at a time: ``[T, d]`` tensors.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import torch
from torch import nn
from torch.nn import functional as F

from src.corpus.records import Utterance
from src.model.context_encoder import CLS_TOKEN, SEP_TOKEN, ContextEncoder
from src.model.layers import FFTStack
from src.utils.errors import ModelInputError

logger = logging.getLogger(__name__)


@dataclass
class CUHidden:
    h: torch.Tensor  # [T, d_model]
    predicted_log_durations: torch.Tensor  # [T]

    def __post_init__(self):
        if self.h.dim() != 2 or self.predicted_log_durations.shape != (self.h.shape[0],):
            raise ModelInputError(
                f"CUHidden needs h [T, d] and durations [T], got {tuple(self.h.shape)} "
                f"and {tuple(self.predicted_log_durations.shape)}"
            )

    @property
    def n_phonemes(self) -> int:
        return self.h.shape[0]


def build_pairs(utt: Utterance) -> List[str]:
    """``[CLS] u_k [SEP] u_k+1`` for each adjacent pair of the 2l+1 window."""
    if len(utt.neighbors_before) != len(utt.neighbors_after):
        raise ModelInputError(
            f"neighbor lists differ in length: {len(utt.neighbors_before)} vs {len(utt.neighbors_after)}"
        )
    window = utt.window
    return [f"{CLS_TOKEN} {window[k]} {SEP_TOKEN} {window[k + 1]}" for k in range(len(window) - 1)]


def embed_context(utt: Utterance, encoder: ContextEncoder) -> torch.Tensor:
    """[2l, d_ctx] pair embeddings; ``[0, d_ctx]`` when l = 0."""
    pairs = build_pairs(utt)
    if not pairs:
        return torch.zeros(0, encoder.dim)
    return torch.stack([encoder.encode(pair) for pair in pairs])


class PhonemeEncoder(nn.Module):
    def __init__(
        self,
        n_symbols: int,
        n_speakers: int,
        d_model: int = 256,
        n_layers: int = 4,
        n_heads: int = 2,
        ffn_dim: int = 1024,
        kernel_size: int = 9,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.embedding = nn.Embedding(n_symbols, d_model)
        self.stack = FFTStack(n_layers, d_model, n_heads, ffn_dim, kernel_size, dropout)
        self.speaker_embedding = nn.Embedding(n_speakers, d_model)

    def forward(self, phoneme_ids: torch.Tensor, speaker_index: int) -> torch.Tensor:
        if phoneme_ids.dim() != 1 or phoneme_ids.numel() == 0:
            raise ModelInputError(f"need a non-empty phoneme id vector, got shape {tuple(phoneme_ids.shape)}")
        if not 0 <= speaker_index < self.speaker_embedding.num_embeddings:
            raise ModelInputError(f"speaker index {speaker_index} outside the speaker table")
        mixture = self.stack(self.embedding(phoneme_ids))
        return mixture + self.speaker_embedding.weight[speaker_index]


class ContextFusion(nn.Module):
    """Attention from each phoneme encoding over the 2l pair embeddings."""

    def __init__(self, d_model: int, d_ctx: int, n_heads: int = 8, dropout: float = 0.1):
        super().__init__()
        self.d_model = d_model
        self.d_ctx = d_ctx
        self.attention = nn.MultiheadAttention(
            d_model, n_heads, dropout=dropout, kdim=d_ctx, vdim=d_ctx, batch_first=True
        )

    def forward(
        self, mixture: torch.Tensor, context: Optional[torch.Tensor]
    ) -> Tuple[torch.Tensor, Optional[torch.Tensor]]:
        if mixture.dim() != 2 or mixture.shape[1] != self.d_model:
            raise ModelInputError(f"F must be [T, {self.d_model}], got {tuple(mixture.shape)}")
        if context is None or context.shape[0] == 0:
            return torch.zeros_like(mixture), None
        if context.dim() != 2 or context.shape[1] != self.d_ctx:
            raise ModelInputError(f"B must be [2l, {self.d_ctx}], got {tuple(context.shape)}")
        context = context.to(mixture.dtype)
        fused, weights = self.attention(
            mixture.unsqueeze(0),
            context.unsqueeze(0),
            context.unsqueeze(0),
            need_weights=True,
            average_attn_weights=True,
        )
        return fused.squeeze(0), weights.squeeze(0)


class DurationPredictor(nn.Module):
    def __init__(self, d_model: int, channels: int = 256, kernel_size: int = 3, dropout: float = 0.1):
        super().__init__()
        padding = (kernel_size - 1) // 2
        self.conv1 = nn.Conv1d(d_model, channels, kernel_size, padding=padding)
        self.norm1 = nn.LayerNorm(channels)
        self.conv2 = nn.Conv1d(channels, channels, kernel_size, padding=padding)
        self.norm2 = nn.LayerNorm(channels)
        self.dropout = nn.Dropout(dropout)
        self.linear = nn.Linear(channels, 1)

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        # [T, d] -> [T] log(duration + 1)
        x = hidden.t().unsqueeze(0)
        x = F.relu(self.conv1(x)).squeeze(0).t()
        x = self.dropout(self.norm1(x))
        x = F.relu(self.conv2(x.t().unsqueeze(0))).squeeze(0).t()
        x = self.dropout(self.norm2(x))
        return self.linear(x).squeeze(-1)


class HiddenProjection(nn.Module):
    def __init__(
        self,
        d_model: int,
        duration_channels: int = 256,
        duration_kernel: int = 3,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.proj = nn.Linear(2 * d_model, d_model)
        self.duration_predictor = DurationPredictor(d_model, duration_channels, duration_kernel, dropout)

    def forward(self, fused: torch.Tensor, mixture: torch.Tensor) -> CUHidden:
        if fused.shape != mixture.shape:
            raise ModelInputError(
                f"G and F must have matching shapes, got {tuple(fused.shape)} and {tuple(mixture.shape)}"
            )
        h = self.proj(torch.cat([fused, mixture], dim=-1))
        return CUHidden(h, self.duration_predictor(h))


def duration_loss(predicted_log_durations: torch.Tensor, durations) -> torch.Tensor:
    target = torch.log(
        torch.as_tensor(durations, dtype=predicted_log_durations.dtype, device=predicted_log_durations.device)
        + 1.0
    )
    if target.shape != predicted_log_durations.shape:
        raise ModelInputError(
            f"{predicted_log_durations.shape[0]} predicted durations vs {target.shape[0]} targets"
        )
    return F.mse_loss(predicted_log_durations, target)
