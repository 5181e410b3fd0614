"""Typed, immutable corpus records."""

from dataclasses import dataclass, field
from typing import Optional, Tuple

from src.utils.errors import AlignmentError, EditScriptError, ManifestError

SPLITS = ("train", "val", "test")
EDIT_OPERATIONS = ("delete", "insert", "replace")


@dataclass(frozen=True)
class Utterance:
    id: str
    speaker_id: str
    text: str
    # nearest-last
    neighbors_before: Tuple[str, ...] = ()
    # nearest-first
    neighbors_after: Tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text:
            raise ManifestError(f"utterance {self.id!r} has empty text")
        object.__setattr__(self, "neighbors_before", tuple(self.neighbors_before))
        object.__setattr__(self, "neighbors_after", tuple(self.neighbors_after))

    @property
    def window(self) -> Tuple[str, ...]:
        return self.neighbors_before + (self.text,) + self.neighbors_after


@dataclass(frozen=True)
class PhonemeTrack:
    """Phonemes with per-phoneme frame durations and word grouping.

    ``word_spans`` are half-open phoneme ranges that partition ``[0, T)``.
    Tracks built by G2P carry all-zero durations until durations are
    predicted or an alignment is attached.
    """

    phonemes: Tuple[str, ...]
    durations_frames: Tuple[int, ...]
    word_spans: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "phonemes", tuple(self.phonemes))
        object.__setattr__(self, "durations_frames", tuple(int(d) for d in self.durations_frames))
        object.__setattr__(self, "word_spans", tuple((int(a), int(b)) for a, b in self.word_spans))
        if len(self.phonemes) != len(self.durations_frames):
            raise AlignmentError(
                f"{len(self.phonemes)} phonemes but {len(self.durations_frames)} durations"
            )
        if any(d < 0 for d in self.durations_frames):
            raise AlignmentError("durations must be non-negative")
        cursor = 0
        for start, end in self.word_spans:
            if start != cursor or end <= start:
                raise AlignmentError(
                    f"word spans must be contiguous and non-empty, got {self.word_spans}"
                )
            cursor = end
        if cursor != len(self.phonemes):
            raise AlignmentError(
                f"word spans cover {cursor} of {len(self.phonemes)} phonemes"
            )

    def __len__(self) -> int:
        return len(self.phonemes)

    @property
    def n_frames(self) -> int:
        return sum(self.durations_frames)

    @property
    def n_words(self) -> int:
        return len(self.word_spans)

    def word_phoneme_range(self, word_start: int, word_end: int) -> Tuple[int, int]:
        """Phoneme range of words ``[word_start, word_end)``; zero width allowed."""
        if not 0 <= word_start <= word_end <= self.n_words:
            raise EditScriptError(
                f"word span ({word_start}, {word_end}) out of range for {self.n_words} words"
            )
        start = self.word_spans[word_start][0] if word_start < self.n_words else len(self)
        end = self.word_spans[word_end - 1][1] if word_end > word_start else start
        return start, end

    def frame_offsets(self) -> Tuple[int, ...]:
        """Start frame of each phoneme, plus the total as the last entry."""
        offsets = [0]
        for d in self.durations_frames:
            offsets.append(offsets[-1] + d)
        return tuple(offsets)

    def with_durations(self, durations) -> "PhonemeTrack":
        return PhonemeTrack(self.phonemes, tuple(int(d) for d in durations), self.word_spans)

    def slice(self, start: int, end: int) -> "PhonemeTrack":
        """Sub-track of phonemes ``[start, end)``; both must sit on word boundaries."""
        spans = tuple((a - start, b - start) for a, b in self.word_spans if start <= a and b <= end)
        return PhonemeTrack(self.phonemes[start:end], self.durations_frames[start:end], spans)

    def concat(self, other: "PhonemeTrack") -> "PhonemeTrack":
        offset = len(self)
        return PhonemeTrack(
            self.phonemes + other.phonemes,
            self.durations_frames + other.durations_frames,
            self.word_spans + tuple((a + offset, b + offset) for a, b in other.word_spans),
        )

    @classmethod
    def empty(cls) -> "PhonemeTrack":
        return cls((), (), ())


@dataclass(frozen=True)
class ManifestEntry:
    utterance_id: str
    speaker_id: str
    text: str
    audio_path: str
    alignment_path: str
    split: str = "train"

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ManifestError(
                f"split {self.split!r} for {self.utterance_id!r} is not one of {', '.join(SPLITS)}"
            )


@dataclass(frozen=True)
class DatasetManifest:
    entries: Tuple[ManifestEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        seen = set()
        for entry in self.entries:
            if entry.utterance_id in seen:
                raise ManifestError(f"duplicate utterance id {entry.utterance_id!r}")
            seen.add(entry.utterance_id)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def split(self, name: str) -> Tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == name)

    def get(self, utterance_id: str) -> Optional[ManifestEntry]:
        for entry in self.entries:
            if entry.utterance_id == utterance_id:
                return entry
        return None

    def utterances(self) -> Tuple[Utterance, ...]:
        """Corpus-ordered utterances without neighbor windows."""
        return tuple(Utterance(e.utterance_id, e.speaker_id, e.text) for e in self.entries)


@dataclass(frozen=True)
class EditScript:
    utterance_id: str
    operation: str
    target_word_span: Tuple[int, int]
    replacement_text: str = ""

    def __post_init__(self):
        object.__setattr__(self, "target_word_span", tuple(int(i) for i in self.target_word_span))
        start, end = self.target_word_span
        if self.operation not in EDIT_OPERATIONS:
            raise EditScriptError(
                f"operation {self.operation!r} is not one of {', '.join(EDIT_OPERATIONS)}"
            )
        if start < 0 or end < start:
            raise EditScriptError(f"invalid word span ({start}, {end})")
        if self.operation == "delete":
            if self.replacement_text:
                raise EditScriptError("delete must not carry replacement text")
            if end == start:
                raise EditScriptError("delete needs a non-empty word span")
        elif self.operation == "insert":
            if end != start:
                raise EditScriptError("insert needs a zero-width word span")
            if not self.replacement_text.strip():
                raise EditScriptError("insert needs replacement text")
        else:
            if end == start:
                raise EditScriptError("replace needs a non-empty word span")
            if not self.replacement_text.strip():
                raise EditScriptError("replace needs replacement text")
