"""Objective metrics: F0 frame error, mel-cepstral distortion, word error
rate and per-phoneme prosody diversity."""

import logging
import math
import re
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from src.audio.frontend import ProsodyTracks
from src.corpus.records import PhonemeTrack
from src.utils.errors import MetricError

logger = logging.getLogger(__name__)

GROSS_PITCH_ERROR = 0.2
MCD_CONSTANT = 10.0 * math.sqrt(2.0) / math.log(10.0)
_PUNCTUATION = re.compile(r"[^\w\s]")


@dataclass(frozen=True)
class FfeBreakdown:
    n_total: int
    n_u_to_v: int
    n_v_to_u: int
    n_f0e: int

    @property
    def ffe(self) -> float:
        return (self.n_u_to_v + self.n_v_to_u + self.n_f0e) / self.n_total

    @property
    def vde_frames(self) -> int:
        return self.n_u_to_v + self.n_v_to_u

    @property
    def gpe_frames(self) -> int:
        return self.n_f0e


@dataclass(frozen=True)
class ProsodyStats:
    f0_std_hz: float
    energy_std: float
    n_phonemes: int = 0


def align_by_truncation(a, b) -> Tuple[np.ndarray, np.ndarray]:
    """Crops two frame-major sequences to their common length."""
    n = min(len(a), len(b))
    return a[:n], b[:n]


def ffe(ref: ProsodyTracks, est: ProsodyTracks) -> FfeBreakdown:
    if ref.n_frames != est.n_frames:
        raise MetricError(f"tracks differ in length: {ref.n_frames} vs {est.n_frames}")
    if ref.n_frames == 0:
        raise MetricError("FFE of zero frames is undefined")
    ref_voiced, est_voiced = ref.voiced_mask, est.voiced_mask
    both = ref_voiced & est_voiced
    ratio = np.divide(est.f0_hz, ref.f0_hz, out=np.ones_like(ref.f0_hz), where=both)
    return FfeBreakdown(
        n_total=ref.n_frames,
        n_u_to_v=int(np.sum(~ref_voiced & est_voiced)),
        n_v_to_u=int(np.sum(ref_voiced & ~est_voiced)),
        n_f0e=int(np.sum(both & (np.abs(ratio - 1.0) > GROSS_PITCH_ERROR))),
    )


def mcd(ref_mfcc: np.ndarray, est_mfcc: np.ndarray) -> float:
    """Mean per-frame mel-cepstral distortion in dB."""
    ref_mfcc, est_mfcc = np.asarray(ref_mfcc, dtype=np.float64), np.asarray(est_mfcc, dtype=np.float64)
    if ref_mfcc.shape != est_mfcc.shape or ref_mfcc.ndim != 2:
        raise MetricError(f"MFCC shapes differ: {ref_mfcc.shape} vs {est_mfcc.shape}")
    if ref_mfcc.shape[0] == 0:
        raise MetricError("MCD of zero frames is undefined")
    distances = np.linalg.norm(ref_mfcc - est_mfcc, axis=1)
    return float(MCD_CONSTANT * distances.mean())


def normalize_transcript(text: str) -> List[str]:
    return _PUNCTUATION.sub("", text.lower()).split()


def word_edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    previous = list(range(len(hyp) + 1))
    for i, ref_word in enumerate(ref, start=1):
        current = [i] + [0] * len(hyp)
        for j, hyp_word in enumerate(hyp, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (ref_word != hyp_word),
            )
        previous = current
    return previous[-1]


def wer(ref_text: str, hyp_text: str) -> float:
    ref_words = normalize_transcript(ref_text)
    if not ref_words:
        raise MetricError("WER needs a non-empty reference")
    return word_edit_distance(ref_words, normalize_transcript(hyp_text)) / len(ref_words)


def prosody_diversity(samples: Sequence[ProsodyTracks], track: PhonemeTrack) -> ProsodyStats:
    """Across-sample population std of per-phoneme mean F0 and relative energy,
    averaged over phonemes.

    Relative energy is frame energy over the utterance-mean energy. A
    phoneme is skipped when any sample has no voiced frame inside it.
    """
    if len(samples) < 2:
        raise MetricError(f"prosody diversity needs at least 2 samples, got {len(samples)}")
    n_frames = track.n_frames
    for sample in samples:
        if sample.n_frames < n_frames:
            raise MetricError(f"sample has {sample.n_frames} frames, durations need {n_frames}")
    samples = [s.truncate(n_frames) for s in samples]
    relative = []
    for s in samples:
        mean_energy = s.energy.mean() if n_frames else 0.0
        relative.append(s.energy / mean_energy if mean_energy > 0 else np.zeros_like(s.energy))

    offsets = track.frame_offsets()
    f0_stds, energy_stds = [], []
    for p in range(len(track)):
        start, end = offsets[p], offsets[p + 1]
        if end == start:
            continue
        voiced = [s.voiced_mask[start:end] for s in samples]
        if not all(v.any() for v in voiced):
            continue
        f0_means = [s.f0_hz[start:end][v].mean() for s, v in zip(samples, voiced)]
        energy_means = [r[start:end].mean() for r in relative]
        f0_stds.append(np.std(f0_means))
        energy_stds.append(np.std(energy_means))
    if not f0_stds:
        raise MetricError("every phoneme is unvoiced in at least one sample")
    return ProsodyStats(float(np.mean(f0_stds)), float(np.mean(energy_stds)), len(f0_stds))
