from typing import List, Optional, Sequence

import numpy as np

from src.corpus.records import PhonemeTrack
from src.editing.edit_plan import EditPlan
from src.model.acoustic_model import round_half_away
from src.utils.errors import EditError


def adjust_durations(
    predicted: Sequence[float],
    plan: EditPlan,
    original: Optional[PhonemeTrack] = None,
) -> List[int]:
    """Edited-track durations D'.

    Unedited phonemes keep their ground-truth durations. Edited phonemes take
    their predicted duration scaled by
    ``r = sum(original unedited) / sum(predicted unedited)`` and rounded half
    away from zero.
    """
    original = original if original is not None else plan.original
    predicted = np.asarray(predicted, dtype=np.float64)
    if predicted.shape != (len(plan.phonemes_edited),):
        raise EditError(
            f"{predicted.shape[0] if predicted.ndim else 0} predictions for "
            f"{len(plan.phonemes_edited)} edited phonemes"
        )
    if len(original) != len(plan.flag_del):
        raise EditError("original track does not match the plan")

    edited = np.asarray(plan.flag_add, dtype=bool)
    kept_original = np.asarray(
        [original.durations_frames[i] for i in plan.kept_original_index()], dtype=np.int64
    )
    out = np.zeros(len(predicted), dtype=np.int64)
    out[~edited] = kept_original
    if not edited.any():
        return out.tolist()

    predicted_kept = predicted[~edited].sum()
    if predicted_kept <= 0:
        raise EditError("predicted durations of the unedited phonemes sum to zero")
    ratio = kept_original.sum() / predicted_kept
    out[edited] = round_half_away(predicted[edited] * ratio)
    return out.tolist()
