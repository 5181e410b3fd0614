import json
import logging
from pathlib import Path
from typing import Dict, Iterable, Sequence, Tuple, Union

from sklearn.model_selection import train_test_split

from src.corpus.records import SPLITS, DatasetManifest, ManifestEntry
from src.utils.errors import CorpusError, ManifestError

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("id", "speaker", "text", "audio", "alignment")
DEFAULT_SPLIT_FRACTIONS = (0.90, 0.05, 0.05)


def _resolve(base_dir: Path, value: str) -> str:
    path = Path(value)
    if not path.is_absolute():
        path = base_dir / path
    return str(path)


def load_manifest(
    path: Union[str, Path],
    split_fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS,
    seed: int = 42,
) -> DatasetManifest:
    """
    Reads a JSON-lines manifest. Relative audio/alignment paths are resolved
    against the manifest's directory; lines without a ``split`` key get one
    from :func:`assign_splits`.
    """
    path = Path(path)
    if not path.exists():
        raise ManifestError("manifest not found", path=path)

    rows = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            if not raw.strip():
                continue
            try:
                row = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ManifestError(f"malformed JSON: {e.msg}", path=path, line=line_no) from e
            if not isinstance(row, dict):
                raise ManifestError("each line must be a JSON object", path=path, line=line_no)
            missing = [k for k in REQUIRED_KEYS if k not in row]
            if missing:
                raise ManifestError(f"missing keys {missing}", path=path, line=line_no)
            rows.append((line_no, row))

    pending = [str(row["id"]) for _, row in rows if "split" not in row]
    assigned = assign_splits(pending, split_fractions, seed) if pending else {}

    entries = []
    base_dir = path.parent
    for line_no, row in rows:
        try:
            entries.append(
                ManifestEntry(
                    utterance_id=str(row["id"]),
                    speaker_id=str(row["speaker"]),
                    text=str(row["text"]),
                    audio_path=_resolve(base_dir, row["audio"]),
                    alignment_path=_resolve(base_dir, row["alignment"]),
                    split=row.get("split", assigned.get(str(row["id"]))),
                )
            )
        except CorpusError as e:
            raise ManifestError(str(e), path=path, line=line_no) from e

    try:
        manifest = DatasetManifest(tuple(entries))
    except CorpusError as e:
        raise ManifestError(str(e), path=path) from e
    logger.info(f"Loaded {len(manifest)} manifest entries from {path}")
    return manifest


def save_manifest(manifest: DatasetManifest, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for entry in manifest:
            row = {
                "id": entry.utterance_id,
                "speaker": entry.speaker_id,
                "text": entry.text,
                "audio": entry.audio_path,
                "alignment": entry.alignment_path,
                "split": entry.split,
            }
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    return path


def assign_splits(
    ids: Iterable[str],
    fractions: Sequence[float] = DEFAULT_SPLIT_FRACTIONS,
    seed: int = 42,
) -> Dict[str, str]:
    """Seeded train/val/test assignment; every id gets exactly one split."""
    ids = list(ids)
    if len(fractions) != len(SPLITS) or any(f < 0 for f in fractions):
        raise ManifestError(f"need {len(SPLITS)} non-negative split fractions")
    total = float(sum(fractions))
    if total <= 0:
        raise ManifestError("split fractions sum to zero")
    train_frac, val_frac, test_frac = (f / total for f in fractions)

    n_holdout = int(round(len(ids) * (val_frac + test_frac)))
    if len(ids) < 2 or n_holdout == 0:
        return {i: "train" for i in ids}
    if n_holdout >= len(ids):
        n_holdout = len(ids) - 1 if train_frac > 0 else len(ids)

    if n_holdout == len(ids):
        train_ids, holdout = [], ids
    else:
        train_ids, holdout = train_test_split(ids, test_size=n_holdout, random_state=seed)

    n_test = int(round(len(holdout) * test_frac / (val_frac + test_frac)))
    if n_test == 0:
        val_ids, test_ids = holdout, []
    elif n_test >= len(holdout):
        val_ids, test_ids = [], holdout
    else:
        val_ids, test_ids = train_test_split(holdout, test_size=n_test, random_state=seed)

    splits = {i: "train" for i in train_ids}
    splits.update({i: "val" for i in val_ids})
    splits.update({i: "test" for i in test_ids})
    return splits


def split_summary(manifest: DatasetManifest) -> Tuple[int, int, int]:
    return tuple(len(manifest.split(name)) for name in SPLITS)
