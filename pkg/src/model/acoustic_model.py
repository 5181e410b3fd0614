"""The wired acoustic model: CU-embedding -> prior/posterior -> decoder.

``prior_kind="standard"`` fixes the prior to N(0, 1) (fine-grained VAE
baseline); ``context_l=0`` bypasses the context fusion.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch
from torch import nn

from src.corpus.records import PhonemeTrack, Utterance
from src.editing.edit_plan import EditPlan
from src.editing.prior_patch import BoundarySmoother, patch_prior
from src.model.context_encoder import ContextEncoder
from src.model.cu_embedding import (
    ContextFusion,
    CUHidden,
    HiddenProjection,
    PhonemeEncoder,
    embed_context,
)
from src.model.cuc_vae import LatentBundle, PosteriorHead, PriorHead, pool_frames, sample_latent
from src.model.decoder import DecoderConfig, LatentProjection, MelDecoder, length_regulate
from src.model.vocab import PhonemeVocab, SpeakerTable
from src.utils.errors import ModelInputError
from src.utils.run_config import ModelConfig

logger = logging.getLogger(__name__)


@dataclass
class ModelInput:
    phoneme_ids: torch.Tensor  # [T] long
    speaker_index: int
    context: Optional[torch.Tensor] = None  # [2l, d_ctx]
    durations: Optional[torch.Tensor] = None  # [T] long, ground truth
    mel: Optional[torch.Tensor] = None  # [N, n_mels], N = sum(durations)


@dataclass
class ModelOutput:
    mel: torch.Tensor
    hidden: CUHidden
    latents: LatentBundle


def prepare_input(
    track: PhonemeTrack,
    speaker_id: str,
    utterance: Optional[Utterance],
    vocab: PhonemeVocab,
    speakers: SpeakerTable,
    encoder: Optional[ContextEncoder] = None,
    mel: Optional[np.ndarray] = None,
    with_durations: bool = True,
) -> ModelInput:
    if len(track) == 0:
        raise ModelInputError("phoneme track is empty")
    context = None
    if utterance is not None and encoder is not None:
        context = embed_context(utterance, encoder)
    return ModelInput(
        phoneme_ids=vocab.encode(track.phonemes),
        speaker_index=speakers.index(speaker_id),
        context=context,
        durations=torch.tensor(track.durations_frames, dtype=torch.long) if with_durations else None,
        mel=None if mel is None else torch.as_tensor(np.asarray(mel), dtype=torch.float32),
    )


def round_half_away(values) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    return (np.sign(values) * np.floor(np.abs(values) + 0.5)).astype(np.int64)


def durations_from_log(predicted_log_durations: torch.Tensor) -> torch.Tensor:
    """Rounded frame counts from log(d + 1) predictions; never all zero."""
    raw = np.clip(np.expm1(predicted_log_durations.detach().double().cpu().numpy()), 0.0, None)
    durations = round_half_away(raw)
    if durations.sum() == 0:
        durations = np.ones_like(durations)
    return torch.as_tensor(durations, dtype=torch.long)


class AcousticModel(nn.Module):
    def __init__(self, config: ModelConfig, n_symbols: int, n_speakers: int):
        super().__init__()
        self.config = config
        self.context_l = config.context_l
        self.prior_kind = config.prior
        self.encoder = PhonemeEncoder(
            n_symbols,
            n_speakers,
            d_model=config.d_model,
            n_layers=config.n_enc_layers,
            n_heads=config.n_heads,
            ffn_dim=config.ffn_dim,
            kernel_size=config.conv_kernel,
            dropout=config.dropout,
        )
        self.fusion = ContextFusion(config.d_model, config.d_ctx, config.fusion_heads, config.dropout)
        self.projection = HiddenProjection(
            config.d_model, config.duration_channels, config.duration_kernel, config.dropout
        )
        self.prior = PriorHead(config.d_model, config.latent_dim)
        self.posterior = PosteriorHead(config.n_mels, config.latent_dim)
        self.smoother = BoundarySmoother(config.latent_dim, config.smoother_kernel)
        self.latent_projection = LatentProjection(config.latent_dim, config.d_model)
        self.decoder = MelDecoder(
            DecoderConfig(
                n_blocks=config.n_dec_blocks,
                d_model=config.d_model,
                n_heads=config.n_heads,
                conv_kernel=config.conv_kernel,
                n_mels=config.n_mels,
                ffn_dim=config.ffn_dim,
                dropout=config.dropout,
            )
        )

    def hidden(self, inputs: ModelInput) -> CUHidden:
        mixture = self.encoder(inputs.phoneme_ids, inputs.speaker_index)
        context = inputs.context if self.context_l > 0 else None
        fused, _ = self.fusion(mixture, context)
        return self.projection(fused, mixture)

    def prior_stats(self, hidden: CUHidden) -> Tuple[torch.Tensor, torch.Tensor]:
        if self.prior_kind == "standard":
            zeros = hidden.h.new_zeros(hidden.n_phonemes, self.config.latent_dim)
            return zeros, zeros.clone()
        return self.prior(hidden.h)

    def posterior_stats(self, mel: torch.Tensor, durations) -> Tuple[torch.Tensor, torch.Tensor]:
        return self.posterior(pool_frames(mel.to(self.posterior.mu_conv.weight.dtype), durations))

    def decode(self, hidden: CUHidden, z: torch.Tensor, durations) -> torch.Tensor:
        expanded = length_regulate(self.latent_projection(hidden, z), durations)
        return self.decoder(expanded)

    def forward(
        self,
        inputs: ModelInput,
        eps: Optional[torch.Tensor] = None,
        generator: Optional[torch.Generator] = None,
        plan: Optional[EditPlan] = None,
    ) -> ModelOutput:
        """Training pass with ground-truth durations and mel.

        With a ``plan`` (masked training) the posterior of masked phonemes
        is replaced by mu = 0, sigma = 1 and smoothed before sampling.
        """
        if inputs.mel is None or inputs.durations is None:
            raise ModelInputError("training forward needs ground-truth mel and durations")
        hidden = self.hidden(inputs)
        mu_p, log_sigma_p = self.prior_stats(hidden)
        mu, log_sigma = self.posterior_stats(inputs.mel, inputs.durations)
        if plan is not None:
            kept = torch.tensor(plan.kept_original_index(), dtype=torch.long)
            patched = patch_prior(mu.index_select(0, kept), log_sigma.index_select(0, kept), plan, self.smoother)
            mu, log_sigma = patched.mu_prime, patched.log_sigma_prime
        latents = sample_latent(mu, log_sigma, mu_p, log_sigma_p, eps=eps, generator=generator)
        mel = self.decode(hidden, latents.z, inputs.durations)
        return ModelOutput(mel, hidden, latents)

    def reconstruct(self, inputs: ModelInput, eps: Optional[torch.Tensor] = None, generator=None) -> ModelOutput:
        """Posterior reconstruction from a reference mel (no masking)."""
        return self.forward(inputs, eps=eps, generator=generator)

    def n_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)
