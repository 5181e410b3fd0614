"""The run configuration document.

A run is fully described by one YAML file with four sections
(``audio``, ``model``, ``train``, ``paths``). Every ablation row is a
config delta: either a named preset or a list of dotted ``key=value``
overrides applied on top of the document.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import yaml

from src.audio.frontend import AudioConfig
from src.utils.config import CACHE_DIR, CHECKPOINT_DIR, DATA_DIR, RUNS_DIR
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

LATENT_DIM = 2


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 256
    n_enc_layers: int = 4
    n_dec_blocks: int = 4
    n_heads: int = 2
    fusion_heads: int = 8
    conv_kernel: int = 9
    ffn_dim: int = 1024
    latent_dim: int = LATENT_DIM
    context_l: int = 5
    d_ctx: int = 768
    context_encoder: str = "stub"  # stub | cache
    prior: str = "utterance"  # utterance | standard (fine-grained VAE)
    duration_kernel: int = 3
    duration_channels: int = 256
    smoother_kernel: int = 5
    dropout: float = 0.1
    n_mels: int = 80


@dataclass(frozen=True)
class TrainConfig:
    beta1: float = 1.0
    beta2: float = 1.0
    lambda_mask: float = 1.5
    mask_rate: float = 0.5
    frame_weighting: str = "biased"  # biased | uniform
    lr: float = 1e-3
    steps: int = 2000
    seed: int = 0
    batch_size: int = 4
    kl_warmup_frac: float = 0.2
    checkpoint_every: int = 500
    log_every: int = 50
    grad_clip: float = 1.0


@dataclass(frozen=True)
class PathsConfig:
    manifest: str = str(DATA_DIR / "manifest.jsonl")
    cache_dir: str = str(CACHE_DIR)
    checkpoint_dir: str = str(CHECKPOINT_DIR)
    run_dir: str = str(RUNS_DIR / "default")
    embedding_cache: Optional[str] = None
    embedding_cache_repo: Optional[str] = None
    lexicon: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    audio: AudioConfig = field(default_factory=AudioConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def __post_init__(self):
        validate(self)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        return _digest(self.to_dict())

    def model_fingerprint(self) -> str:
        """Digest of the sections that determine tensor shapes."""
        return _digest({"audio": self.to_dict()["audio"], "model": self.to_dict()["model"]})


_SECTIONS = {
    "audio": AudioConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "paths": PathsConfig,
}

# Named config deltas for the evaluation-table variants.
PRESETS: Dict[str, Dict[str, Any]] = {
    "cuc_vae": {"model.context_l": 5, "model.prior": "utterance"},
    "baseline1": {"model.prior": "standard"},
    "baseline2": {"model.context_l": 0},
    "baseline3": {"model.context_l": 2},
    "loss_ratio_1": {"train.lambda_mask": 1.0},
    "loss_ratio_1.5": {"train.lambda_mask": 1.5},
    "loss_ratio_2": {"train.lambda_mask": 2.0},
    "loss_ratio_3": {"train.lambda_mask": 3.0},
    "toy": {
        "model.d_model": 32,
        "model.n_enc_layers": 2,
        "model.n_dec_blocks": 2,
        "model.ffn_dim": 64,
        "model.d_ctx": 48,
        "model.context_l": 1,
        "model.duration_channels": 32,
        "model.conv_kernel": 3,
        "model.dropout": 0.0,
        "train.steps": 200,
        "train.checkpoint_every": 100,
        "train.log_every": 20,
    },
}


def _digest(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def validate(config: RunConfig) -> None:
    model, train = config.model, config.train
    if model.latent_dim != LATENT_DIM:
        raise ConfigError(f"model.latent_dim must be {LATENT_DIM}, got {model.latent_dim}")
    if model.n_mels != config.audio.n_mels:
        raise ConfigError("model.n_mels must equal audio.n_mels")
    if model.context_l < 0:
        raise ConfigError("model.context_l must be >= 0")
    if model.d_model % model.n_heads or model.d_model % model.fusion_heads:
        raise ConfigError("model.d_model must be divisible by n_heads and fusion_heads")
    if model.n_dec_blocks < 1:
        raise ConfigError("model.n_dec_blocks must be >= 1")
    if model.context_encoder not in ("stub", "cache"):
        raise ConfigError(f"unknown model.context_encoder {model.context_encoder!r}")
    if model.prior not in ("utterance", "standard"):
        raise ConfigError(f"unknown model.prior {model.prior!r}")
    if not 0.0 < train.mask_rate < 1.0:
        raise ConfigError("train.mask_rate must lie in (0, 1)")
    if train.lambda_mask < 0:
        raise ConfigError("train.lambda_mask must be >= 0")
    if train.frame_weighting not in ("biased", "uniform"):
        raise ConfigError(f"unknown train.frame_weighting {train.frame_weighting!r}")
    if train.steps < 0 or train.batch_size < 1:
        raise ConfigError("train.steps must be >= 0 and train.batch_size >= 1")
    if not 0.0 <= train.kl_warmup_frac <= 1.0:
        raise ConfigError("train.kl_warmup_frac must lie in [0, 1]")


def from_dict(data: Optional[Dict[str, Any]]) -> RunConfig:
    data = data or {}
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        values = data.get(name) or {}
        allowed = {f.name for f in dataclasses.fields(cls)}
        extra = set(values) - allowed
        if extra:
            raise ConfigError(f"unknown keys in [{name}]: {sorted(extra)}")
        try:
            sections[name] = cls(**values)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid [{name}] section: {e}") from e
    return RunConfig(**sections)


def load_config(path: Union[str, Path, None] = None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    return from_dict(data)


def save_config(config: RunConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config.to_dict(), f, sort_keys=False)
    return path


def parse_override(item: str) -> tuple:
    if "=" not in item:
        raise ConfigError(f"override must look like section.key=value, got {item!r}")
    key, raw = item.split("=", 1)
    return key.strip(), yaml.safe_load(raw)


def apply_overrides(
    config: RunConfig, overrides: Union[Dict[str, Any], Iterable[str]]
) -> RunConfig:
    if not isinstance(overrides, dict):
        overrides = dict(parse_override(item) for item in overrides)
    data = config.to_dict()
    for key, value in overrides.items():
        section, _, name = key.partition(".")
        if section not in data or not name:
            raise ConfigError(f"unknown config key {key!r}")
        if name not in data[section]:
            raise ConfigError(f"unknown config key {key!r}")
        data[section][name] = value
    return from_dict(data)


def apply_preset(config: RunConfig, name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    logger.info(f"Applying preset '{name}'")
    return apply_overrides(config, PRESETS[name])


def resolve_config(
    path: Union[str, Path, None] = None,
    presets: Iterable[str] = (),
    overrides: Iterable[str] = (),
) -> RunConfig:
    config = load_config(path)
    for name in presets:
        config = apply_preset(config, name)
    return apply_overrides(config, list(overrides))
