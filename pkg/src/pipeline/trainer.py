"""Training loop for the TTS (``tts``) and masked speech-editing (``se``) objectives."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
import torch

from src.editing.masking import biased_frame_weights, sample_training_mask
from src.model.cu_embedding import duration_loss
from src.model.cuc_vae import elbo_loss, kl_warmup
from src.model.context_encoder import build_context_encoder
from src.pipeline.checkpoint import atomic_write_json, build_model, save_checkpoint
from src.pipeline.dataset import PreparedCorpus
from src.utils.errors import ConfigError, TrainingDivergedError
from src.utils.run_config import RunConfig, save_config
from src.utils.seeding import make_rngs

logger = logging.getLogger(__name__)

MODES = ("tts", "se")
TRACE_KEYS = ("recon", "kl1", "kl2", "dur_loss", "total")


@dataclass
class TrainResult:
    checkpoint_path: Path
    loss_trace: List[Dict[str, float]] = field(default_factory=list)

    @property
    def initial_recon(self) -> Optional[float]:
        return self.loss_trace[0]["recon"] if self.loss_trace else None

    @property
    def final_recon(self) -> Optional[float]:
        return self.loss_trace[-1]["recon"] if self.loss_trace else None


class Trainer:
    def __init__(
        self,
        config: RunConfig,
        corpus: PreparedCorpus,
        mode: str = "tts",
        run_dir: Optional[Union[str, Path]] = None,
        checkpoint_dir: Optional[Union[str, Path]] = None,
    ):
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {mode!r}")
        if len(corpus) == 0:
            raise ConfigError("cannot train on an empty corpus")
        self.config = config
        self.corpus = corpus
        self.mode = mode
        self.run_dir = Path(run_dir or config.paths.run_dir)
        self.checkpoint_dir = Path(checkpoint_dir or config.paths.checkpoint_dir)

        self.rngs = make_rngs(config.train.seed)
        torch.manual_seed(self.rngs.init_seed)
        self.model = build_model(config, corpus.vocab, corpus.speakers)
        torch.manual_seed(self.rngs.dropout_seed)
        self.optimizer = torch.optim.Adam(self.model.parameters(), lr=config.train.lr)
        self.train_indices = corpus.train_indices()
        self.last_checkpoint: Optional[Path] = None

    def frame_weights(self, plan) -> np.ndarray:
        if self.config.train.frame_weighting == "uniform":
            return np.ones(len(plan.frame_mask))
        return biased_frame_weights(plan, self.config.train.lambda_mask)

    def train_step(self, step: int) -> Dict[str, float]:
        cfg = self.config.train
        beta1 = kl_warmup(step, cfg.steps, cfg.kl_warmup_frac, cfg.beta1)
        beta2 = kl_warmup(step, cfg.steps, cfg.kl_warmup_frac, cfg.beta2)
        batch = self.rngs.data.choice(
            self.train_indices, size=min(cfg.batch_size, len(self.train_indices)), replace=False
        )

        self.model.train()
        self.optimizer.zero_grad()
        record = dict.fromkeys(TRACE_KEYS, 0.0)
        for index in batch:
            example = self.corpus.example(int(index))
            plan, weights = None, None
            if self.mode == "se":
                # masked words stand in for an edit region
                plan = sample_training_mask(example.item.track, cfg.mask_rate, rng=self.rngs.mask)
                weights = self.frame_weights(plan)
            output = self.model(example.inputs, generator=self.rngs.noise, plan=plan)
            terms = elbo_loss(output.mel, example.mel, output.latents, beta1, beta2, weights)
            dur = duration_loss(output.hidden.predicted_log_durations, example.inputs.durations)
            loss = (terms.total + dur) / len(batch)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(step, self.last_checkpoint)
            loss.backward()
            values = terms.as_dict()
            values["dur_loss"] = float(dur.detach())
            values["total"] += values["dur_loss"]
            for key in TRACE_KEYS:
                record[key] += values[key] / len(batch)

        if cfg.grad_clip > 0:
            torch.nn.utils.clip_grad_norm_(self.model.parameters(), cfg.grad_clip)
        self.optimizer.step()
        record["step"] = step
        return record

    def save(self, step: int) -> Path:
        self.last_checkpoint = save_checkpoint(
            self.checkpoint_dir,
            self.model,
            self.optimizer,
            step,
            self.config,
            self.corpus.vocab,
            self.corpus.speakers,
        )
        return self.last_checkpoint

    def fit(self) -> TrainResult:
        cfg = self.config.train
        self.run_dir.mkdir(parents=True, exist_ok=True)
        save_config(self.config, self.run_dir / "config.yaml")
        logger.info(
            f"Training ({self.mode}) {self.model.n_parameters():,} parameters on "
            f"{len(self.train_indices)} utterances for {cfg.steps} steps"
        )

        trace: List[Dict[str, float]] = []
        if cfg.steps == 0:
            self.save(0)
        for step in range(1, cfg.steps + 1):
            record = self.train_step(step)
            trace.append(record)
            if step == 1 or step % cfg.log_every == 0 or step == cfg.steps:
                logger.info(
                    f"step {step}/{cfg.steps} "
                    + " ".join(f"{k}={record[k]:.4f}" for k in TRACE_KEYS)
                )
            if step % cfg.checkpoint_every == 0 or step == cfg.steps:
                self.save(step)

        atomic_write_json(self.run_dir / "loss_trace.json", trace)
        if trace:
            plot_loss_curve(trace, self.run_dir / "loss_curve.png")
        return TrainResult(self.last_checkpoint, trace)


def plot_loss_curve(trace: List[Dict[str, float]], path: Union[str, Path]) -> Path:
    frame = pd.DataFrame(trace).set_index("step")
    fig, ax = plt.subplots(figsize=(8, 4))
    for key in TRACE_KEYS:
        values = frame[key]
        if key != "total" and np.all(values > 0):
            ax.plot(frame.index, values, label=key)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return Path(path)


def cmd_train(
    config: RunConfig,
    mode: str = "tts",
    run_dir: Optional[Union[str, Path]] = None,
    checkpoint_dir: Optional[Union[str, Path]] = None,
) -> TrainResult:
    encoder = build_context_encoder(config)
    corpus = PreparedCorpus.from_cache(
        config.paths.cache_dir, encoder, config.model.context_l, config.audio
    )
    return Trainer(config, corpus, mode, run_dir, checkpoint_dir).fit()
