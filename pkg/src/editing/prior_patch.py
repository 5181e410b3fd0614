import logging
from dataclasses import dataclass
from typing import Tuple

import torch
from torch import nn

from src.editing.edit_plan import EditPlan
from src.utils.errors import EditError

logger = logging.getLogger(__name__)


@dataclass
class PatchedPrior:
    mu_hat: torch.Tensor
    log_sigma_hat: torch.Tensor
    mu_prime: torch.Tensor
    log_sigma_prime: torch.Tensor

    @property
    def sigma_hat(self) -> torch.Tensor:
        return torch.exp(self.log_sigma_hat)

    @property
    def sigma_prime(self) -> torch.Tensor:
        return torch.exp(self.log_sigma_prime)


class BoundarySmoother(nn.Module):
    """Learned convolution over the phoneme axis blending patched statistics.

    Starts as the identity (centre tap 1, everything else 0).
    """

    def __init__(self, latent_dim: int = 2, kernel_size: int = 5):
        super().__init__()
        if kernel_size % 2 == 0:
            raise ValueError(f"kernel_size must be odd, got {kernel_size}")
        padding = kernel_size // 2
        self.mu_conv = nn.Conv1d(latent_dim, latent_dim, kernel_size, padding=padding)
        self.log_sigma_conv = nn.Conv1d(latent_dim, latent_dim, kernel_size, padding=padding)
        self.reset_to_identity()

    def reset_to_identity(self) -> None:
        with torch.no_grad():
            for conv in (self.mu_conv, self.log_sigma_conv):
                conv.weight.zero_()
                conv.bias.zero_()
                centre = conv.kernel_size[0] // 2
                for channel in range(conv.in_channels):
                    conv.weight[channel, channel, centre] = 1.0

    def forward(
        self, mu_hat: torch.Tensor, log_sigma_hat: torch.Tensor
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        mu = self.mu_conv(mu_hat.t().unsqueeze(0)).squeeze(0).t()
        log_sigma = self.log_sigma_conv(log_sigma_hat.t().unsqueeze(0)).squeeze(0).t()
        return mu, log_sigma


def splice_unedited(values: torch.Tensor, plan: EditPlan, fill: float) -> torch.Tensor:
    """Places per-phoneme rows of the kept phonemes on the edited axis; ``fill`` elsewhere."""
    kept = plan.kept_edited_index()
    if values.shape[0] != len(kept):
        raise EditError(f"{values.shape[0]} statistics rows for {len(kept)} unedited phonemes")
    out = values.new_full((len(plan.phonemes_edited), values.shape[1]), fill)
    if not kept:
        return out
    index = torch.tensor(kept, dtype=torch.long, device=values.device)
    return out.index_copy(0, index, values)


def patch_prior(
    mu: torch.Tensor,
    log_sigma: torch.Tensor,
    plan: EditPlan,
    smoother: BoundarySmoother,
) -> PatchedPrior:
    """Splices mu = 0, sigma = 1 into edited positions and smooths the result.

    ``mu`` / ``log_sigma`` are posterior statistics of the unedited phonemes,
    in edited-track order.
    """
    if mu.shape != log_sigma.shape:
        raise EditError(f"mu {tuple(mu.shape)} and log_sigma {tuple(log_sigma.shape)} differ")
    mu_hat = splice_unedited(mu, plan, 0.0)
    log_sigma_hat = splice_unedited(log_sigma, plan, 0.0)
    if mu_hat.shape[0] == 0:
        raise EditError("edited track has no phonemes")
    # no edit: posterior passes through unsmoothed
    if plan.is_identity:
        return PatchedPrior(mu_hat, log_sigma_hat, mu_hat, log_sigma_hat)
    mu_prime, log_sigma_prime = smoother(mu_hat, log_sigma_hat)
    return PatchedPrior(mu_hat, log_sigma_hat, mu_prime, log_sigma_prime)
