"""Utterance-specific prior, mel posterior, the residual sampling chain and
the two-KL ELBO.

Per phoneme the latent is 2-dim. With z_p = mu_p + sigma_p * eps and
z = mu + sigma * z_p, the posterior over z given the context is
N(mu + sigma * mu_p, (sigma * sigma_p)^2); both KL terms are closed form.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from src.utils.errors import ModelInputError

logger = logging.getLogger(__name__)


@dataclass
class LatentBundle:
    mu: torch.Tensor
    log_sigma: torch.Tensor
    mu_p: torch.Tensor
    log_sigma_p: torch.Tensor
    z_p: torch.Tensor
    z: torch.Tensor

    @property
    def sigma(self) -> torch.Tensor:
        return torch.exp(self.log_sigma)

    @property
    def sigma_p(self) -> torch.Tensor:
        return torch.exp(self.log_sigma_p)


@dataclass
class ElboTerms:
    recon: torch.Tensor
    kl_posterior_prior: torch.Tensor
    kl_prior_standard: torch.Tensor
    beta1: float
    beta2: float
    total: torch.Tensor

    def as_dict(self) -> Dict[str, float]:
        return {
            "recon": float(self.recon.detach()),
            "kl1": float(self.kl_posterior_prior.detach()),
            "kl2": float(self.kl_prior_standard.detach()),
            "total": float(self.total.detach()),
        }


class GaussianHead(nn.Module):
    """Two kernel-1 convolutions emitting (mu, log_sigma) per position."""

    def __init__(self, in_channels: int, latent_dim: int = 2):
        super().__init__()
        self.mu_conv = nn.Conv1d(in_channels, latent_dim, kernel_size=1)
        self.log_sigma_conv = nn.Conv1d(in_channels, latent_dim, kernel_size=1)

    def forward(self, features: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        x = features.t().unsqueeze(0)
        mu = self.mu_conv(x).squeeze(0).t()
        log_sigma = self.log_sigma_conv(x).squeeze(0).t()
        return mu, log_sigma


class PriorHead(GaussianHead):
    pass


class PosteriorHead(GaussianHead):
    pass


def pool_frames(frames: torch.Tensor, durations) -> torch.Tensor:
    """Mean of each phoneme's frame span; zero rows for duration-0 phonemes."""
    durations = torch.as_tensor(durations, dtype=torch.long, device=frames.device)
    if durations.dim() != 1 or bool((durations < 0).any()):
        raise ModelInputError("durations must be a vector of non-negative integers")
    if int(durations.sum()) != frames.shape[0]:
        raise ModelInputError(
            f"durations sum to {int(durations.sum())} but the mel has {frames.shape[0]} frames"
        )
    owner = torch.repeat_interleave(torch.arange(durations.shape[0], device=frames.device), durations)
    sums = frames.new_zeros(durations.shape[0], frames.shape[1]).index_add(0, owner, frames)
    counts = durations.clamp(min=1).to(frames.dtype).unsqueeze(1)
    return sums / counts


def prior_from_context(head: PriorHead, h: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    return head(h)


def posterior_from_mel(
    head: PosteriorHead, mel_frames: torch.Tensor, durations
) -> Tuple[torch.Tensor, torch.Tensor]:
    return head(pool_frames(mel_frames, durations))


def _check_shapes(*tensors: torch.Tensor) -> None:
    shape = tensors[0].shape
    if len(shape) != 2 or any(t.shape != shape for t in tensors):
        raise ModelInputError(f"latent statistics must share one [T, 2] shape, got {[tuple(t.shape) for t in tensors]}")


def draw_noise(like: torch.Tensor, generator: Optional[torch.Generator] = None) -> torch.Tensor:
    noise = torch.randn(like.shape, generator=generator, dtype=like.dtype)
    return noise.to(like.device)


def closed_form_latent(mu, sigma, mu_p, sigma_p, eps):
    """z written in one step: mu + sigma * mu_p + sigma * sigma_p * eps."""
    return mu + sigma * mu_p + sigma * sigma_p * eps


def sample_latent(
    mu: torch.Tensor,
    log_sigma: torch.Tensor,
    mu_p: torch.Tensor,
    log_sigma_p: torch.Tensor,
    eps: Optional[torch.Tensor] = None,
    generator: Optional[torch.Generator] = None,
) -> LatentBundle:
    _check_shapes(mu, log_sigma, mu_p, log_sigma_p)
    if eps is None:
        eps = draw_noise(mu, generator)
    elif eps.shape != mu.shape:
        raise ModelInputError(f"eps shape {tuple(eps.shape)} does not match {tuple(mu.shape)}")
    sigma, sigma_p = torch.exp(log_sigma), torch.exp(log_sigma_p)
    z_p = mu_p + sigma_p * eps
    z = mu + sigma * z_p
    with torch.no_grad():
        expected = closed_form_latent(mu, sigma, mu_p, sigma_p, eps)
        tolerance = 1e-12 if z.dtype == torch.float64 else 1e-4
        if not torch.allclose(z, expected, rtol=tolerance, atol=tolerance):
            raise ModelInputError("sampling chain disagrees with its closed form")
    return LatentBundle(mu, log_sigma, mu_p, log_sigma_p, z_p, z)


def inference_sample(
    mu_p: torch.Tensor,
    log_sigma_p: torch.Tensor,
    temperature: float = 1.0,
    eps: Optional[torch.Tensor] = None,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    if temperature < 0:
        raise ModelInputError(f"temperature must be >= 0, got {temperature}")
    if eps is None:
        eps = draw_noise(mu_p, generator)
    return mu_p + temperature * torch.exp(log_sigma_p) * eps


def gaussian_kl(mean_q, log_std_q, mean_p, log_std_p) -> torch.Tensor:
    """Elementwise KL(N(mean_q, std_q^2) || N(mean_p, std_p^2))."""
    var_ratio = torch.exp(2 * (log_std_q - log_std_p))
    mean_term = (mean_q - mean_p) ** 2 * torch.exp(-2 * log_std_p)
    return 0.5 * (var_ratio + mean_term - 1.0) - (log_std_q - log_std_p)


def kl_terms(bundle: LatentBundle) -> Tuple[torch.Tensor, torch.Tensor]:
    sigma = bundle.sigma
    kl1 = gaussian_kl(
        bundle.mu + sigma * bundle.mu_p,
        bundle.log_sigma + bundle.log_sigma_p,
        bundle.mu_p,
        bundle.log_sigma_p,
    ).sum()
    kl2 = (
        0.5 * (bundle.mu_p**2 + torch.exp(2 * bundle.log_sigma_p) - 1.0 - 2 * bundle.log_sigma_p)
    ).sum()
    return kl1, kl2


def weighted_mae(pred: torch.Tensor, target: torch.Tensor, frame_weights=None) -> torch.Tensor:
    """sum_frames w_t * mean_bins |pred - target| / n_frames."""
    if pred.shape != target.shape:
        raise ModelInputError(f"mel shapes differ: {tuple(pred.shape)} vs {tuple(target.shape)}")
    per_frame = (pred - target).abs().mean(dim=1)
    if frame_weights is None:
        return per_frame.mean()
    weights = torch.as_tensor(frame_weights, dtype=pred.dtype, device=pred.device)
    if weights.shape != per_frame.shape:
        raise ModelInputError(f"{weights.shape[0]} frame weights for {per_frame.shape[0]} frames")
    return (weights * per_frame).mean()


def elbo_loss(
    pred_mel: torch.Tensor,
    target_mel: torch.Tensor,
    bundle: LatentBundle,
    beta1: float = 1.0,
    beta2: float = 1.0,
    frame_weights: Optional[Sequence[float]] = None,
) -> ElboTerms:
    recon = weighted_mae(pred_mel, target_mel, frame_weights)
    kl1, kl2 = kl_terms(bundle)
    total = recon + beta1 * kl1 + beta2 * kl2
    return ElboTerms(recon, kl1, kl2, beta1, beta2, total)


def kl_warmup(step: int, total_steps: int, warmup_frac: float, beta: float) -> float:
    """Linear ramp of a KL weight from 0 to ``beta`` over the first fraction of training."""
    warmup_steps = int(np.ceil(warmup_frac * total_steps))
    if warmup_steps <= 0:
        return beta
    return beta * min(1.0, step / warmup_steps)
