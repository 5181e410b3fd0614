"""Prepared-corpus access: the cache index, neighbor windows and model inputs."""

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import torch

from src.audio.frontend import AudioConfig, MelSpectrogram, ProsodyTracks
from src.audio.mel_io import read_mel, read_prosody
from src.corpus.context_window import build_context_window
from src.corpus.records import PhonemeTrack, Utterance
from src.model.acoustic_model import ModelInput, prepare_input
from src.model.context_encoder import ContextEncoder
from src.model.cu_embedding import embed_context
from src.model.vocab import PhonemeVocab, SpeakerTable
from src.pipeline.features import INDEX_NAME, cache_paths
from src.utils.errors import CorpusError, ManifestError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CachedUtterance:
    id: str
    speaker_id: str
    text: str
    split: str
    audio_path: str
    track: PhonemeTrack
    mel_path: Path
    prosody_path: Path

    def load_mel(self, config: AudioConfig = AudioConfig()) -> MelSpectrogram:
        return read_mel(self.mel_path, config)

    def load_prosody(self) -> ProsodyTracks:
        return read_prosody(self.prosody_path)


def load_index(cache_dir: Union[str, Path]) -> List[CachedUtterance]:
    cache_dir = Path(cache_dir)
    index_path = cache_dir / INDEX_NAME
    if not index_path.exists():
        raise ManifestError("feature index not found; run `cucvae prepare` first", path=index_path)
    items = []
    with open(index_path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                track = PhonemeTrack(row["phonemes"], row["durations"], row["word_spans"])
                mel_path, prosody_path = cache_paths(cache_dir, row["id"])
                items.append(
                    CachedUtterance(
                        id=row["id"],
                        speaker_id=row["speaker"],
                        text=row["text"],
                        split=row.get("split", "train"),
                        audio_path=row.get("audio", ""),
                        track=track,
                        mel_path=mel_path,
                        prosody_path=prosody_path,
                    )
                )
            except (json.JSONDecodeError, KeyError) as e:
                raise ManifestError(f"bad index row: {e}", path=index_path, line=line_no) from e
            except CorpusError as e:
                raise ManifestError(str(e), path=index_path, line=line_no) from e
    return items


@dataclass
class TrainingExample:
    item: CachedUtterance
    inputs: ModelInput
    mel: torch.Tensor


class PreparedCorpus:
    """Corpus-ordered cached utterances plus symbol tables and context vectors."""

    def __init__(
        self,
        items: List[CachedUtterance],
        encoder: ContextEncoder,
        context_l: int,
        audio: AudioConfig = AudioConfig(),
        vocab: Optional[PhonemeVocab] = None,
        speakers: Optional[SpeakerTable] = None,
    ):
        self.items = items
        self.encoder = encoder
        self.context_l = context_l
        self.audio = audio
        self.vocab = vocab or PhonemeVocab()
        self.speakers = speakers or SpeakerTable(item.speaker_id for item in items)
        self._positions: Dict[str, int] = {item.id: i for i, item in enumerate(items)}
        self._examples: Dict[int, TrainingExample] = {}

    @classmethod
    def from_cache(cls, cache_dir, encoder, context_l, audio=AudioConfig(), vocab=None, speakers=None):
        return cls(load_index(cache_dir), encoder, context_l, audio, vocab, speakers)

    def __len__(self) -> int:
        return len(self.items)

    @cached_property
    def utterances(self) -> Tuple[Utterance, ...]:
        return tuple(Utterance(i.id, i.speaker_id, i.text) for i in self.items)

    def position(self, utterance_id: str) -> int:
        if utterance_id not in self._positions:
            raise ManifestError(f"unknown utterance {utterance_id!r}")
        return self._positions[utterance_id]

    def window(self, index: int) -> Utterance:
        return build_context_window(self.utterances, index, self.context_l)

    def train_indices(self) -> List[int]:
        indices = [i for i, item in enumerate(self.items) if item.split == "train"]
        if not indices:
            logger.warning("No utterances in the train split; training on the whole corpus")
            indices = list(range(len(self.items)))
        return indices

    def example(self, index: int) -> TrainingExample:
        if index not in self._examples:
            item = self.items[index]
            mel = item.load_mel(self.audio)
            inputs = prepare_input(
                item.track,
                item.speaker_id,
                self.window(index),
                self.vocab,
                self.speakers,
                self.encoder,
                mel=mel.frames,
            )
            self._examples[index] = TrainingExample(item, inputs, inputs.mel)
        return self._examples[index]

    def context_for(self, utterance: Utterance) -> torch.Tensor:
        return embed_context(utterance, self.encoder)
