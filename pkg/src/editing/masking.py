"""Masked-training simulation of an edit and the biased frame weights."""

import logging
from typing import Optional

import numpy as np

from src.corpus.records import PhonemeTrack
from src.editing.edit_plan import EditPlan
from src.utils.errors import EditError

logger = logging.getLogger(__name__)


def sample_training_mask(
    track: PhonemeTrack,
    rate: float = 0.5,
    rng: Optional[np.random.Generator] = None,
) -> EditPlan:
    """Masks a contiguous run of whole words covering about ``rate`` of the frames.

    Without ``rng`` the run closest to the target wins (earliest start, then
    shortest, on ties). With ``rng`` a run is drawn uniformly among those
    whose gap to the target is within half the largest word's frames.
    The plan reconstructs the same phonemes (b' = b).
    """
    if not 0.0 < rate < 1.0:
        raise EditError(f"mask rate must lie in (0, 1), got {rate}")
    if track.n_words == 0:
        raise EditError("cannot mask a track without words")

    word_frames = np.asarray(
        [sum(track.durations_frames[a:b]) for a, b in track.word_spans], dtype=np.float64
    )
    cumulative = np.concatenate(([0.0], np.cumsum(word_frames)))
    target = rate * cumulative[-1]

    runs = []
    for start in range(track.n_words):
        for end in range(start + 1, track.n_words + 1):
            gap = abs(cumulative[end] - cumulative[start] - target)
            runs.append((gap, start, end))
    best = min(runs)

    if rng is None:
        _, start, end = best
    else:
        tolerance = max(best[0], word_frames.max() / 2)
        pool = [run for run in runs if run[0] <= tolerance]
        _, start, end = pool[int(rng.integers(len(pool)))]

    first, last = track.word_phoneme_range(start, end)
    return EditPlan.from_segments(
        track, track, first, last - first, last - first, len(track) - last
    )


def biased_frame_weights(plan: EditPlan, lam: float = 1.5) -> np.ndarray:
    """1 on unmasked frames, ``lam`` on masked frames."""
    if lam < 0:
        raise EditError(f"loss ratio must be >= 0, got {lam}")
    mask = np.asarray(plan.frame_mask, dtype=bool)
    return np.where(mask, float(lam), 1.0)
