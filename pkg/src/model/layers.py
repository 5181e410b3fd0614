"""Feed-forward Transformer building blocks shared by the phoneme encoder and
the mel decoder (self-attention followed by a 1D-conv position-wise FFN,
each with residual connection and layer norm)."""

import math

import torch
from torch import nn
from torch.nn import functional as F


def sinusoid_table(n_positions: int, dim: int, dtype=torch.float32, device=None) -> torch.Tensor:
    """[n_positions, dim] sinusoidal position encodings."""
    position = torch.arange(n_positions, dtype=torch.float64, device=device).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, dim, 2, dtype=torch.float64, device=device) * (-math.log(10000.0) / dim)
    )
    table = torch.zeros(n_positions, dim, dtype=torch.float64, device=device)
    table[:, 0::2] = torch.sin(position * div)
    table[:, 1::2] = torch.cos(position * div)[:, : dim // 2]
    return table.to(dtype)


class ConvFeedForward(nn.Module):
    def __init__(self, d_model: int, hidden_dim: int, kernel_size: int, dropout: float):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {kernel_size}")
        padding = (kernel_size - 1) // 2
        self.conv1 = nn.Conv1d(d_model, hidden_dim, kernel_size, padding=padding)
        self.conv2 = nn.Conv1d(hidden_dim, d_model, kernel_size, padding=padding)
        self.layer_norm = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        # hidden: [batch, time, d_model]
        residual = hidden
        hidden = hidden.transpose(1, 2)
        hidden = self.conv2(F.relu(self.conv1(hidden)))
        hidden = self.dropout(hidden.transpose(1, 2))
        return self.layer_norm(hidden + residual)


class FFTBlock(nn.Module):
    def __init__(
        self, d_model: int, n_heads: int, ffn_dim: int, kernel_size: int, dropout: float
    ):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(d_model, n_heads, dropout=dropout, batch_first=True)
        self.layer_norm = nn.LayerNorm(d_model)
        self.dropout = nn.Dropout(dropout)
        self.ffn = ConvFeedForward(d_model, ffn_dim, kernel_size, dropout)

    def forward(self, hidden: torch.Tensor) -> torch.Tensor:
        residual = hidden
        hidden, _ = self.self_attn(hidden, hidden, hidden, need_weights=False)
        hidden = self.layer_norm(self.dropout(hidden) + residual)
        return self.ffn(hidden)


class FFTStack(nn.Module):
    """Adds sinusoidal positions to a single [time, d_model] sequence and runs the blocks."""

    def __init__(
        self,
        n_blocks: int,
        d_model: int,
        n_heads: int,
        ffn_dim: int,
        kernel_size: int,
        dropout: float,
    ):
        super().__init__()
        self.d_model = d_model
        self.blocks = nn.ModuleList(
            FFTBlock(d_model, n_heads, ffn_dim, kernel_size, dropout) for _ in range(n_blocks)
        )

    def forward(self, sequence: torch.Tensor) -> torch.Tensor:
        positions = sinusoid_table(
            sequence.shape[0], self.d_model, dtype=sequence.dtype, device=sequence.device
        )
        hidden = (sequence + positions).unsqueeze(0)
        for block in self.blocks:
            hidden = block(hidden)
        return hidden.squeeze(0)
