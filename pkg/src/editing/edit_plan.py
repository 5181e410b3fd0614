"""Edit plans: which original phonemes go, which edited phonemes are new.

Every plan splits the original track into ``[a | b | c]`` and the edited
track into ``[a | b' | c]``. ``flag_del`` marks b over the original,
``flag_add`` marks b' over the edited track, and ``frame_mask`` is
``flag_add`` expanded by the edited durations.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.corpus.records import EditScript, PhonemeTrack
from src.utils.errors import EditError

logger = logging.getLogger(__name__)


def _expand(flags: Tuple[int, ...], durations: Tuple[int, ...]) -> Tuple[int, ...]:
    return tuple(np.repeat(np.asarray(flags, dtype=int), np.asarray(durations, dtype=int)).tolist())


@dataclass(frozen=True)
class EditPlan:
    original: PhonemeTrack
    phonemes_edited: PhonemeTrack
    flag_del: Tuple[int, ...]
    flag_add: Tuple[int, ...]
    frame_mask: Tuple[int, ...]
    prefix: int
    deleted: int
    inserted: int
    suffix: int

    def __post_init__(self):
        a, b, b_new, c = self.prefix, self.deleted, self.inserted, self.suffix
        if min(a, b, b_new, c) < 0:
            raise EditError("segment lengths must be non-negative")
        if len(self.original) != a + b + c or len(self.phonemes_edited) != a + b_new + c:
            raise EditError(
                f"segments ({a}, {b}, {b_new}, {c}) do not fit tracks of "
                f"{len(self.original)} and {len(self.phonemes_edited)} phonemes"
            )
        if self.flag_del != (0,) * a + (1,) * b + (0,) * c:
            raise EditError("flag_del must be three runs [0_a, 1_b, 0_c]")
        if self.flag_add != (0,) * a + (1,) * b_new + (0,) * c:
            raise EditError("flag_add must be three runs [0_a, 1_b', 0_c]")
        if self.frame_mask != _expand(self.flag_add, self.phonemes_edited.durations_frames):
            raise EditError("frame_mask must equal flag_add expanded by the edited durations")

    @classmethod
    def from_segments(
        cls,
        original: PhonemeTrack,
        edited: PhonemeTrack,
        prefix: int,
        deleted: int,
        inserted: int,
        suffix: int,
    ) -> "EditPlan":
        flag_del = (0,) * prefix + (1,) * deleted + (0,) * suffix
        flag_add = (0,) * prefix + (1,) * inserted + (0,) * suffix
        return cls(
            original=original,
            phonemes_edited=edited,
            flag_del=flag_del,
            flag_add=flag_add,
            frame_mask=_expand(flag_add, edited.durations_frames),
            prefix=prefix,
            deleted=deleted,
            inserted=inserted,
            suffix=suffix,
        )

    @property
    def is_identity(self) -> bool:
        return self.deleted == 0 and self.inserted == 0

    def kept_original_index(self) -> List[int]:
        return [i for i, flag in enumerate(self.flag_del) if not flag]

    def kept_edited_index(self) -> List[int]:
        return [i for i, flag in enumerate(self.flag_add) if not flag]

    def with_durations(self, durations) -> "EditPlan":
        return EditPlan.from_segments(
            self.original,
            self.phonemes_edited.with_durations(durations),
            self.prefix,
            self.deleted,
            self.inserted,
            self.suffix,
        )


def build_edit_plan(
    original: PhonemeTrack,
    script: EditScript,
    g2p_of_replacement: Optional[PhonemeTrack] = None,
) -> EditPlan:
    start, end = original.word_phoneme_range(*script.target_word_span)
    if script.operation == "delete":
        inserted = PhonemeTrack.empty()
    else:
        inserted = g2p_of_replacement or PhonemeTrack.empty()
        if len(inserted) == 0:
            raise EditError(
                f"{script.operation} on {script.utterance_id!r} needs replacement phonemes"
            )
    edited = original.slice(0, start).concat(inserted).concat(original.slice(end, len(original)))
    logger.debug(
        f"{script.operation} on {script.utterance_id}: phonemes [{start}, {end}) -> {len(inserted)} new"
    )
    return EditPlan.from_segments(
        original, edited, start, end - start, len(inserted), len(original) - end
    )


def compose_plans(first: EditPlan, second: EditPlan) -> EditPlan:
    """Applies ``second`` to the result of ``first``.

    Only deletion-then-insertion at the same position composes into a
    single three-run plan, which is the case replace reduces to.
    """
    if second.original != first.phonemes_edited:
        raise EditError("second plan does not start from the first plan's output")
    if first.inserted or second.deleted or first.prefix != second.prefix:
        raise EditError("plans do not compose into a single contiguous edit")
    return EditPlan.from_segments(
        first.original,
        second.phonemes_edited,
        first.prefix,
        first.deleted,
        second.inserted,
        first.suffix,
    )


def identity_plan(track: PhonemeTrack) -> EditPlan:
    return EditPlan.from_segments(track, track, len(track), 0, 0, 0)
