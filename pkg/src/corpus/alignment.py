"""Forced-alignment ingestion.

Alignments are tab-separated rows ``phoneme  start_sec  end_sec  word_index``
(UTF-8, '.' decimal separator, '#' comments allowed). A TextGrid importer
would plug in here by producing the same rows.
"""

import csv
import logging
import math
from pathlib import Path
from typing import List, Tuple, Union

from src.corpus.records import PhonemeTrack
from src.utils.errors import AlignmentError

logger = logging.getLogger(__name__)

# Tolerated disagreement between alignment and mel frame counts.
MAX_FRAME_MISMATCH = 1


def seconds_to_frame(seconds: float, fps: float) -> int:
    # round half up; times are non-negative
    return int(math.floor(seconds * fps + 0.5))


def _read_rows(path: Path) -> List[Tuple[int, str, float, float, int]]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f, delimiter="\t")
        for line_no, row in enumerate(reader, start=1):
            if not row or not "".join(row).strip() or row[0].startswith("#"):
                continue
            if len(row) != 4:
                raise AlignmentError(f"expected 4 tab-separated fields, got {len(row)}", path, line_no)
            phoneme = row[0].strip()
            try:
                start, end = float(row[1]), float(row[2])
                word_index = int(row[3])
            except ValueError as e:
                raise AlignmentError(f"bad number: {e}", path, line_no) from e
            rows.append((line_no, phoneme, start, end, word_index))
    return rows


def load_alignment(path: Union[str, Path], fps: float) -> PhonemeTrack:
    """Reads an alignment TSV into a PhonemeTrack at ``fps`` frames per second.

    Durations are ``round(end*fps) - round(start*fps)``; zero-length
    intervals are kept with duration 0. Word spans come from runs of equal
    ``word_index``.
    """
    path = Path(path)
    if not path.exists():
        raise AlignmentError("alignment not found", path)
    if fps <= 0:
        raise AlignmentError(f"fps must be positive, got {fps}", path)

    phonemes, durations, word_spans = [], [], []
    previous_end = 0.0
    run_word, run_start, seen_words = None, 0, set()
    for index, (line_no, phoneme, start, end, word_index) in enumerate(_read_rows(path)):
        if start < 0 or end < 0:
            raise AlignmentError("negative time", path, line_no)
        if end < start:
            raise AlignmentError(f"interval ends before it starts ({start} > {end})", path, line_no)
        if start < previous_end:
            raise AlignmentError(
                f"interval starting at {start} overlaps the previous one ending at {previous_end}",
                path,
                line_no,
            )
        previous_end = end

        if word_index != run_word:
            if word_index in seen_words:
                raise AlignmentError(f"word index {word_index} is not contiguous", path, line_no)
            if run_word is not None:
                word_spans.append((run_start, index))
            run_word, run_start = word_index, index
            seen_words.add(word_index)

        phonemes.append(phoneme)
        durations.append(seconds_to_frame(end, fps) - seconds_to_frame(start, fps))

    if run_word is not None:
        word_spans.append((run_start, len(phonemes)))
    return PhonemeTrack(tuple(phonemes), tuple(durations), tuple(word_spans))


def reconcile_durations(
    track: PhonemeTrack, n_frames: int, source: Union[str, Path, None] = None
) -> PhonemeTrack:
    """Makes ``sum(durations) == n_frames``.

    A one-frame disagreement is repaired on the final phoneme (clipped when
    the alignment is long, extended when it is short). Anything larger is
    fatal.
    """
    gap = n_frames - track.n_frames
    if gap == 0:
        return track
    if abs(gap) > MAX_FRAME_MISMATCH or len(track) == 0:
        raise AlignmentError(
            f"alignment covers {track.n_frames} frames but mel has {n_frames}", source
        )

    durations = list(track.durations_frames)
    if gap > 0:
        durations[-1] += gap
    else:
        # clip the last phoneme that still has frames
        index = max(i for i, d in enumerate(durations) if d > 0)
        durations[index] += gap
    logger.debug(f"Repaired {gap:+d} frame mismatch for {source}")
    return track.with_durations(durations)
