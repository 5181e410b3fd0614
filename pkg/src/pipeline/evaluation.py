"""Corpus-level objective evaluation and prosody-diversity sampling."""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from rich.progress import track

from src.audio.frontend import AudioConfig, extract_f0, load_wav, mel_to_mfcc, wav_to_mel
from src.evaluation.metrics import ProsodyStats, align_by_truncation, ffe, mcd, prosody_diversity, wer
from src.evaluation.report import write_item_csv, write_report
from src.evaluation.transcriber import SidecarTranscriber, Transcriber
from src.pipeline.synthesis import Synthesizer
from src.utils.errors import CucVaeError, ManifestError, MetricError
from src.utils.run_config import RunConfig

logger = logging.getLogger(__name__)


def load_pairs(path: Union[str, Path]) -> List[Dict]:
    """JSON-lines ``{"id", "ref", "hyp", "text"?}``; paths relative to the file."""
    path = Path(path)
    if not path.exists():
        raise ManifestError("pairs file not found", path=path)
    pairs = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                pair = {"id": str(row.get("id", line_no)), "ref": row["ref"], "hyp": row["hyp"]}
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise ManifestError(f"bad pair row: {e}", path=path, line=line_no) from e
            for key in ("ref", "hyp"):
                if not Path(pair[key]).is_absolute():
                    pair[key] = str(path.parent / pair[key])
            pair["text"] = row.get("text")
            pairs.append(pair)
    return pairs


def evaluate_pair(
    ref_path: Union[str, Path],
    hyp_path: Union[str, Path],
    audio: AudioConfig = AudioConfig(),
    text: Optional[str] = None,
    transcriber: Optional[Transcriber] = None,
) -> Dict:
    ref_wav, hyp_wav = load_wav(ref_path, audio), load_wav(hyp_path, audio)
    ref_prosody, hyp_prosody = extract_f0(ref_wav, audio), extract_f0(hyp_wav, audio)
    n = min(ref_prosody.n_frames, hyp_prosody.n_frames)
    if n == 0:
        raise MetricError("no common frames after truncation")
    breakdown = ffe(ref_prosody.truncate(n), hyp_prosody.truncate(n))
    ref_mfcc, hyp_mfcc = align_by_truncation(
        mel_to_mfcc(wav_to_mel(ref_wav, audio)), mel_to_mfcc(wav_to_mel(hyp_wav, audio))
    )
    row = {
        "ffe": breakdown.ffe,
        "gpe_frames": breakdown.gpe_frames,
        "vde_frames": breakdown.vde_frames,
        "mcd_db": mcd(ref_mfcc, hyp_mfcc),
        "wer": None,
        "n_frames": n,
    }
    if text and transcriber is not None:
        try:
            row["wer"] = wer(text, transcriber.transcribe(hyp_path))
        except MetricError as e:
            # missing transcript: keep FFE and MCD
            logger.warning(f"No WER for {hyp_path}: {e}")
    return row


def cmd_evaluate(
    config: RunConfig,
    pairs_path: Union[str, Path],
    out_dir: Union[str, Path],
    transcriber: Optional[Transcriber] = None,
) -> Path:
    """Scores every pair; item-level failures are logged and skipped."""
    transcriber = transcriber or SidecarTranscriber()
    items, skipped = [], []
    for pair in track(load_pairs(pairs_path), description="Evaluating..."):
        try:
            row = evaluate_pair(pair["ref"], pair["hyp"], config.audio, pair["text"], transcriber)
        except CucVaeError as e:
            logger.warning(f"Skipping {pair['id']}: {e}")
            skipped.append({"id": pair["id"], "error": str(e)})
            continue
        items.append({"id": pair["id"], **row})
    out_dir = Path(out_dir)
    write_item_csv(items, out_dir / "metrics_items.csv")
    return write_report(items, out_dir / "metrics.json", skipped)


def sample_diversity(
    synthesizer: Synthesizer,
    utterance_id: str,
    n_samples: int = 10,
    temperature: float = 1.0,
    seed: int = 0,
) -> Tuple[ProsodyStats, List[int]]:
    """Draws ``n_samples`` syntheses and measures per-phoneme prosody spread."""
    if n_samples < 2:
        raise MetricError(f"need at least 2 samples, got {n_samples}")
    item = synthesizer.item(utterance_id)
    inputs = synthesizer.prepare(item.track, item.speaker_id, synthesizer.window(utterance_id))
    tracks, durations = [], None
    for k in range(n_samples):
        result = synthesizer.infer(inputs, temperature, seed + k)
        durations = result.durations
        tracks.append(extract_f0(synthesizer.vocoder(result.mel), synthesizer.audio))
    timing = item.track.with_durations(durations)
    return prosody_diversity(tracks, timing), durations


def cmd_diversity(
    config: RunConfig,
    checkpoint: Union[str, Path],
    utterance_id: str,
    out_dir: Union[str, Path],
    n_samples: int = 10,
    temperature: float = 1.0,
    seed: int = 0,
) -> ProsodyStats:
    synthesizer = Synthesizer.from_checkpoint(checkpoint, config)
    stats, _ = sample_diversity(synthesizer, utterance_id, n_samples, temperature, seed)
    write_report(
        [{"id": utterance_id, "f0_std_hz": stats.f0_std_hz, "energy_std": stats.energy_std}],
        Path(out_dir) / "diversity.json",
    )
    logger.info(
        f"{utterance_id}: F0 std {stats.f0_std_hz:.3f} Hz, relative energy std {stats.energy_std:.4f} "
        f"over {stats.n_phonemes} phonemes"
    )
    return stats
