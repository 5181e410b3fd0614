from typing import Sequence, Union

from src.corpus.records import Utterance

# Stand-in for utterances beyond the corpus edges.
PAD_TEXT = ""


def build_context_window(
    corpus: Sequence[Utterance], index: int, l: int
) -> Utterance:
    """Returns ``corpus[index]`` with its ``l`` neighbors on each side.

    Both neighbor lists always have length exactly ``l``; positions that
    fall outside the corpus hold the empty string.
    """
    if not 0 <= index < len(corpus):
        raise IndexError(f"index {index} outside corpus of {len(corpus)} utterances")
    if l < 0:
        raise ValueError(f"window size must be >= 0, got {l}")

    def text_at(i: int) -> str:
        return _text(corpus[i]) if 0 <= i < len(corpus) else PAD_TEXT

    current = corpus[index]
    before = tuple(text_at(i) for i in range(index - l, index))
    after = tuple(text_at(i) for i in range(index + 1, index + l + 1))
    return Utterance(
        id=current.id,
        speaker_id=current.speaker_id,
        text=current.text,
        neighbors_before=before,
        neighbors_after=after,
    )


def _text(item: Union[Utterance, str]) -> str:
    return item if isinstance(item, str) else item.text
