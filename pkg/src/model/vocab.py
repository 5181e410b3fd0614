from typing import Dict, Iterable, List, Sequence

import torch

from src.corpus.lexicon import ARPABET, LETTER_SYMBOLS

OOV = "<oov>"


class PhonemeVocab:
    """Phoneme symbol table; index 0 is the shared OOV symbol."""

    def __init__(self, symbols: Iterable[str] = ARPABET + LETTER_SYMBOLS):
        ordered = [OOV] + [s for s in dict.fromkeys(symbols) if s != OOV]
        self.symbols: List[str] = ordered
        self._index: Dict[str, int] = {s: i for i, s in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self._index.get(symbol, 0)

    def encode(self, phonemes: Sequence[str]) -> torch.Tensor:
        return torch.tensor([self.index(p) for p in phonemes], dtype=torch.long)

    def to_list(self) -> List[str]:
        return list(self.symbols)


class SpeakerTable:
    """Speaker id table; row 0 is the OOV speaker."""

    def __init__(self, speakers: Iterable[str] = ()):
        ordered = [OOV] + sorted(set(speakers) - {OOV})
        self.speakers: List[str] = ordered
        self._index: Dict[str, int] = {s: i for i, s in enumerate(ordered)}

    def __len__(self) -> int:
        return len(self.speakers)

    def index(self, speaker_id: str) -> int:
        return self._index.get(speaker_id, 0)

    def to_list(self) -> List[str]:
        return list(self.speakers)

    @classmethod
    def from_list(cls, speakers: Sequence[str]) -> "SpeakerTable":
        table = cls()
        table.speakers = list(speakers)
        table._index = {s: i for i, s in enumerate(table.speakers)}
        return table
