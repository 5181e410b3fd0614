"""Checkpoints: weights, optimizer state, config and symbol tables in one torch file."""

import json
import logging
import os
import shutil
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import torch

from src.model.acoustic_model import AcousticModel
from src.model.vocab import PhonemeVocab, SpeakerTable
from src.utils.errors import CheckpointError
from src.utils.run_config import RunConfig, from_dict

logger = logging.getLogger(__name__)

LATEST_NAME = "latest.pt"


@dataclass
class LoadedCheckpoint:
    model: AcousticModel
    config: RunConfig
    step: int
    vocab: PhonemeVocab
    speakers: SpeakerTable
    optimizer_state: Optional[Dict[str, Any]]
    path: Path


def atomic_write_json(path: Union[str, Path], data) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    temp_path = path.with_name(path.name + ".tmp")
    with open(temp_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
        f.flush()
        os.fsync(f.fileno())
    os.replace(temp_path, path)
    return path


def build_model(config: RunConfig, vocab: PhonemeVocab, speakers: SpeakerTable) -> AcousticModel:
    return AcousticModel(config.model, n_symbols=len(vocab), n_speakers=len(speakers))


def save_checkpoint(
    checkpoint_dir: Union[str, Path],
    model: AcousticModel,
    optimizer: Optional[torch.optim.Optimizer],
    step: int,
    config: RunConfig,
    vocab: PhonemeVocab,
    speakers: SpeakerTable,
) -> Path:
    """Writes ``step_<N>.pt`` atomically and refreshes ``latest.pt``."""
    checkpoint_dir = Path(checkpoint_dir)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    path = checkpoint_dir / f"step_{step}.pt"
    payload = {
        "step": step,
        "model_state": model.state_dict(),
        "optimizer_state": optimizer.state_dict() if optimizer is not None else None,
        "config": config.to_dict(),
        "fingerprint": config.fingerprint(),
        "model_fingerprint": config.model_fingerprint(),
        "vocab": vocab.to_list(),
        "speakers": speakers.to_list(),
    }
    temp_path = path.with_name(path.name + ".tmp")
    torch.save(payload, temp_path)
    os.replace(temp_path, path)
    shutil.copy2(path, checkpoint_dir / LATEST_NAME)
    logger.info(f"Checkpoint saved: {path}")
    return path


def load_checkpoint(path: Union[str, Path], config: Optional[RunConfig] = None) -> LoadedCheckpoint:
    """Rebuilds the model stored at ``path``.

    With ``config`` given, a differing model section is an error and any
    other difference only a warning; the stored config is always the one used.
    """
    path = Path(path)
    if path.is_dir():
        path = path / LATEST_NAME
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"{path}: cannot read checkpoint ({e})") from e

    stored = from_dict(payload["config"])
    if config is not None:
        if config.model_fingerprint() != payload["model_fingerprint"]:
            raise CheckpointError(f"{path}: model/audio config differs from the checkpoint")
        if config.fingerprint() != payload["fingerprint"]:
            logger.warning(f"{path}: run config differs from the checkpoint outside the model section")

    vocab = PhonemeVocab(payload["vocab"])
    speakers = SpeakerTable.from_list(payload["speakers"])
    model = build_model(stored, vocab, speakers)
    try:
        model.load_state_dict(payload["model_state"])
    except RuntimeError as e:
        raise CheckpointError(f"{path}: weights do not fit the model ({e})") from e
    model.eval()
    return LoadedCheckpoint(
        model=model,
        config=stored,
        step=int(payload["step"]),
        vocab=vocab,
        speakers=speakers,
        optimizer_state=payload.get("optimizer_state"),
        path=path,
    )


def list_checkpoints(checkpoint_dir: Union[str, Path]) -> List[Path]:
    checkpoint_dir = Path(checkpoint_dir)
    return sorted(checkpoint_dir.glob("step_*.pt"), key=lambda p: int(p.stem.split("_")[1]))
