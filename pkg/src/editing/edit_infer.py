"""Entire-inference speech editing and the splice baselines."""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import torch

from src.audio.frontend import MelSpectrogram
from src.editing.durations import adjust_durations
from src.editing.edit_plan import EditPlan
from src.editing.prior_patch import PatchedPrior, patch_prior
from src.model.acoustic_model import AcousticModel, ModelInput
from src.model.cuc_vae import LatentBundle, sample_latent
from src.utils.errors import EditError

logger = logging.getLogger(__name__)


@dataclass
class EditResult:
    mel: MelSpectrogram
    plan: EditPlan  # carries the adjusted durations D'
    durations: List[int]
    latents: LatentBundle
    patched: PatchedPrior


@torch.no_grad()
def edit_infer(
    model: AcousticModel,
    original_mel: MelSpectrogram,
    plan: EditPlan,
    edited_input: ModelInput,
    eps: Optional[torch.Tensor] = None,
    generator: Optional[torch.Generator] = None,
) -> EditResult:
    """Regenerates the whole mel of the edited utterance.

    ``edited_input`` holds the edited phoneme ids, speaker and context; its
    durations and mel are ignored.
    """
    if len(plan.phonemes_edited) == 0:
        raise EditError("edit leaves no phonemes to synthesize")
    if original_mel.n_frames != plan.original.n_frames:
        raise EditError(
            f"original mel has {original_mel.n_frames} frames, alignment covers {plan.original.n_frames}"
        )
    model.eval()
    # 1. Prior from the edited text and its context
    hidden = model.hidden(edited_input)
    mu_p, log_sigma_p = model.prior_stats(hidden)

    # 2. Posterior of the kept phonemes from the original mel
    frames = torch.as_tensor(original_mel.frames, dtype=torch.float32)
    mu, log_sigma = model.posterior_stats(frames, plan.original.durations_frames)
    kept = torch.tensor(plan.kept_original_index(), dtype=torch.long)
    patched = patch_prior(mu.index_select(0, kept), log_sigma.index_select(0, kept), plan, model.smoother)
    latents = sample_latent(
        patched.mu_prime, patched.log_sigma_prime, mu_p, log_sigma_p, eps=eps, generator=generator
    )

    # 3. Durations: kept phonemes keep theirs, new ones are rescaled
    predicted = np.clip(np.expm1(hidden.predicted_log_durations.double().cpu().numpy()), 0.0, None)
    durations = adjust_durations(predicted, plan)
    if sum(durations) == 0:
        raise EditError("adjusted durations leave no frames to decode")
    mel = model.decode(hidden, latents.z, durations)
    logger.debug(f"Edited mel: {mel.shape[0]} frames for {len(durations)} phonemes")
    return EditResult(
        mel=MelSpectrogram(mel.double().cpu().numpy(), original_mel.config),
        plan=plan.with_durations(durations),
        durations=durations,
        latents=latents,
        patched=patched,
    )


def _kept_spans(plan: EditPlan):
    """(original_start, original_end, edited_start) frame spans of kept phonemes."""
    original_offsets = plan.original.frame_offsets()
    edited_offsets = plan.phonemes_edited.frame_offsets()
    for i, j in zip(plan.kept_original_index(), plan.kept_edited_index()):
        yield original_offsets[i], original_offsets[i + 1], edited_offsets[j]


def splice_mel(original: MelSpectrogram, generated: MelSpectrogram, plan: EditPlan) -> MelSpectrogram:
    """Mel_cut baseline: original frames pasted over the unedited spans."""
    if generated.n_frames != plan.phonemes_edited.n_frames:
        raise EditError("generated mel does not match the plan's edited durations")
    frames = generated.frames.copy()
    for start, end, target in _kept_spans(plan):
        frames[target : target + end - start] = original.frames[start:end]
    return MelSpectrogram(frames, generated.config)


def splice_waveform(
    original_wav: np.ndarray, generated_wav: np.ndarray, plan: EditPlan, hop: int
) -> np.ndarray:
    """Wave_cut baseline: original samples pasted over the unedited spans."""
    original_wav = np.asarray(original_wav, dtype=np.float64)
    out = np.asarray(generated_wav, dtype=np.float64).copy()
    for start, end, target in _kept_spans(plan):
        a, b, t = start * hop, end * hop, target * hop
        n = min(b - a, len(original_wav) - a, len(out) - t)
        if n > 0:
            out[t : t + n] = original_wav[a : a + n]
    return out
