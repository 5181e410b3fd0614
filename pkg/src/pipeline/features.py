"""Feature preparation: manifest -> MEL1 mel / prosody caches + index."""

import json
import logging
from pathlib import Path
from typing import Optional, Union

from rich.progress import track

from src.audio.frontend import extract_f0, load_wav, wav_to_mel
from src.audio.mel_io import write_mel, write_prosody
from src.corpus.alignment import load_alignment, reconcile_durations
from src.corpus.manifest import load_manifest, split_summary
from src.utils.run_config import RunConfig

logger = logging.getLogger(__name__)

INDEX_NAME = "index.jsonl"
MEL_SUFFIX = ".mel"
PROSODY_SUFFIX = ".f0e"


def cache_paths(cache_dir: Union[str, Path], utterance_id: str):
    cache_dir = Path(cache_dir)
    return cache_dir / f"{utterance_id}{MEL_SUFFIX}", cache_dir / f"{utterance_id}{PROSODY_SUFFIX}"


def prepare_features(config: RunConfig, manifest_path: Optional[Union[str, Path]] = None) -> Path:
    """Writes one mel and one prosody cache per manifest entry and an index.

    Any ingestion error aborts the run; the error names the offending file.
    """
    manifest = load_manifest(manifest_path or config.paths.manifest)
    n_train, n_val, n_test = split_summary(manifest)
    logger.info(f"Manifest: {len(manifest)} utterances (train {n_train}, val {n_val}, test {n_test})")
    cache_dir = Path(config.paths.cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    fps = config.audio.frames_per_second

    rows = []
    for entry in track(manifest.entries, description="Preparing features..."):
        # 1. Audio -> mel and prosody
        samples = load_wav(entry.audio_path, config.audio)
        mel = wav_to_mel(samples, config.audio)
        prosody = extract_f0(samples, config.audio)
        # 2. Alignment, snapped to the mel length
        alignment = load_alignment(entry.alignment_path, fps)
        alignment = reconcile_durations(alignment, mel.n_frames, entry.alignment_path)

        # 3. Caches and index row
        mel_path, prosody_path = cache_paths(cache_dir, entry.utterance_id)
        write_mel(mel_path, mel)
        write_prosody(prosody_path, prosody, config.audio)
        rows.append(
            {
                "id": entry.utterance_id,
                "speaker": entry.speaker_id,
                "text": entry.text,
                "split": entry.split,
                "audio": entry.audio_path,
                "n_frames": mel.n_frames,
                "phonemes": list(alignment.phonemes),
                "durations": list(alignment.durations_frames),
                "word_spans": [list(span) for span in alignment.word_spans],
            }
        )
        logger.debug(f"{entry.utterance_id}: {mel.n_frames} frames, {len(alignment)} phonemes")

    index_path = cache_dir / INDEX_NAME
    with open(index_path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    logger.info(f"Prepared {len(rows)} utterances into {cache_dir}")
    return index_path
