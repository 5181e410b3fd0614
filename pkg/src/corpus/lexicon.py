"""Static-lexicon G2P with an OOV passthrough rule.

In-lexicon words map to ARPAbet phonemes. Out-of-lexicon words are
spelled out as letter symbols (``a``..``z``), so every word yields at
least one symbol; text in which no word is in the lexicon is reported as
not covered.
"""

import logging
import re
import string
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from src.corpus.records import PhonemeTrack
from src.utils.config import LEXICON_PATH
from src.utils.errors import CorpusError

logger = logging.getLogger(__name__)

ARPABET = (
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY",
    "F", "G", "HH", "IH", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P",
    "R", "S", "SH", "T", "TH", "UH", "UW", "V", "W", "Y", "Z", "ZH",
)
LETTER_SYMBOLS = tuple(string.ascii_lowercase)

_WORD_CHARS = re.compile(r"[^a-z']+")


def normalize_words(text: str) -> List[str]:
    """Lowercases, strips punctuation (apostrophes kept) and drops empty words."""
    words = []
    for token in text.lower().split():
        word = _WORD_CHARS.sub("", token).strip("'")
        if word:
            words.append(word)
    return words


class Lexicon:
    def __init__(self, entries: Dict[str, Tuple[str, ...]]):
        self.entries = dict(entries)

    @classmethod
    def load(cls, path: Union[str, Path, None] = None) -> "Lexicon":
        path = Path(path) if path is not None else LEXICON_PATH
        if not path.exists():
            raise CorpusError("lexicon not found", path)
        entries = {}
        with open(path, "r", encoding="utf-8") as f:
            for line_no, raw in enumerate(f, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[1].split():
                    raise CorpusError("expected 'word<TAB>phonemes'", path, line_no)
                entries[parts[0].lower()] = tuple(parts[1].split())
        logger.debug(f"Loaded {len(entries)} lexicon entries from {path}")
        return cls(entries)

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.entries

    def word_to_phonemes(self, word: str) -> Tuple[str, ...]:
        word = word.lower()
        if word in self.entries:
            return self.entries[word]
        # OOV passthrough: spell the word
        return tuple(c for c in word if c in LETTER_SYMBOLS)

    def covers(self, text: str) -> bool:
        return any(word in self.entries for word in normalize_words(text))

    def g2p(self, text: str) -> PhonemeTrack:
        phonemes, spans = [], []
        for word in normalize_words(text):
            symbols = self.word_to_phonemes(word)
            if not symbols:
                continue
            spans.append((len(phonemes), len(phonemes) + len(symbols)))
            phonemes.extend(symbols)
        return PhonemeTrack(tuple(phonemes), (0,) * len(phonemes), tuple(spans))


_DEFAULT: Optional[Lexicon] = None


def default_lexicon() -> Lexicon:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Lexicon.load()
    return _DEFAULT
