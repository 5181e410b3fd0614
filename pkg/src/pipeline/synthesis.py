"""Text-to-speech inference from a checkpoint."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import torch

from src.audio.frontend import MelSpectrogram, write_wav
from src.audio.mel_io import write_mel
from src.corpus.lexicon import Lexicon, default_lexicon
from src.corpus.records import PhonemeTrack, Utterance
from src.model.acoustic_model import ModelInput, durations_from_log, prepare_input
from src.model.context_encoder import build_context_encoder
from src.model.cuc_vae import inference_sample
from src.pipeline.checkpoint import LoadedCheckpoint, load_checkpoint
from src.pipeline.dataset import CachedUtterance, PreparedCorpus, load_index
from src.pipeline.vocoder import Vocoder, build_vocoder
from src.utils.errors import ManifestError, ModelInputError
from src.utils.run_config import RunConfig
from src.utils.seeding import noise_generator

logger = logging.getLogger(__name__)


@dataclass
class SynthesisResult:
    mel: MelSpectrogram
    durations: List[int]
    wav: Optional[np.ndarray] = None
    mel_path: Optional[Path] = None
    wav_path: Optional[Path] = None


class Synthesizer:
    def __init__(
        self,
        checkpoint: LoadedCheckpoint,
        lexicon: Optional[Lexicon] = None,
        vocoder: Optional[Vocoder] = None,
        corpus: Optional[PreparedCorpus] = None,
    ):
        self.checkpoint = checkpoint
        self.model = checkpoint.model
        self.config = checkpoint.config
        self.audio = self.config.audio
        self.encoder = corpus.encoder if corpus is not None else build_context_encoder(self.config)
        self.lexicon = lexicon or (
            Lexicon.load(self.config.paths.lexicon) if self.config.paths.lexicon else default_lexicon()
        )
        self.vocoder = vocoder or build_vocoder()
        self.corpus = corpus
        self.model.eval()

    @classmethod
    def from_checkpoint(
        cls,
        path: Union[str, Path],
        config: Optional[RunConfig] = None,
        vocoder: Optional[Vocoder] = None,
        with_corpus: bool = True,
    ) -> "Synthesizer":
        loaded = load_checkpoint(path, config)
        corpus = None
        cache_dir = (config or loaded.config).paths.cache_dir
        if with_corpus and Path(cache_dir).exists():
            try:
                corpus = PreparedCorpus(
                    load_index(cache_dir),
                    build_context_encoder(loaded.config),
                    loaded.config.model.context_l,
                    loaded.config.audio,
                    loaded.vocab,
                    loaded.speakers,
                )
            except ManifestError as e:
                logger.warning(f"Corpus cache unavailable ({e}); utterance ids cannot be used")
        return cls(loaded, vocoder=vocoder, corpus=corpus)

    def item(self, utterance_id: str) -> CachedUtterance:
        if self.corpus is None:
            raise ManifestError(f"unknown utterance {utterance_id!r}: no prepared corpus")
        return self.corpus.items[self.corpus.position(utterance_id)]

    def window(self, utterance_id: str) -> Utterance:
        return self.corpus.window(self.corpus.position(utterance_id))

    def text_input(
        self,
        text: str,
        speaker_id: str,
        neighbors_before: Sequence[str] = (),
        neighbors_after: Sequence[str] = (),
    ) -> ModelInput:
        if not self.lexicon.covers(text):
            raise ModelInputError(f"no word of {text!r} is in the lexicon")
        track = self.lexicon.g2p(text)
        utterance = Utterance("text", speaker_id, text, tuple(neighbors_before), tuple(neighbors_after))
        return self.prepare(track, speaker_id, utterance)

    def prepare(self, track: PhonemeTrack, speaker_id: str, utterance: Utterance, mel=None) -> ModelInput:
        l = self.config.model.context_l
        if len(utterance.neighbors_before) != l or len(utterance.neighbors_after) != l:
            utterance = _pad_window(utterance, l)
        return prepare_input(
            track,
            speaker_id,
            utterance,
            self.checkpoint.vocab,
            self.checkpoint.speakers,
            self.encoder,
            mel=mel,
        )

    @torch.no_grad()
    def infer(
        self,
        inputs: ModelInput,
        temperature: float = 1.0,
        seed: int = 0,
        eps: Optional[torch.Tensor] = None,
    ) -> SynthesisResult:
        """Prior sampling with predicted durations."""
        hidden = self.model.hidden(inputs)
        mu_p, log_sigma_p = self.model.prior_stats(hidden)
        z = inference_sample(mu_p, log_sigma_p, temperature, eps=eps, generator=noise_generator(seed))
        durations = durations_from_log(hidden.predicted_log_durations)
        mel = self.model.decode(hidden, z, durations)
        return SynthesisResult(MelSpectrogram(mel.double().numpy(), self.audio), durations.tolist())

    @torch.no_grad()
    def reconstruct(
        self, utterance_id: str, eps: Optional[torch.Tensor] = None, seed: int = 0
    ) -> SynthesisResult:
        """Posterior path: latents from the reference mel, ground-truth durations."""
        item = self.item(utterance_id)
        mel = item.load_mel(self.audio)
        inputs = self.prepare(item.track, item.speaker_id, self.window(utterance_id), mel=mel.frames)
        output = self.model.reconstruct(inputs, eps=eps, generator=noise_generator(seed))
        return SynthesisResult(
            MelSpectrogram(output.mel.double().numpy(), self.audio), list(item.track.durations_frames)
        )

    def synthesize_utterance(self, utterance_id: str, temperature: float = 1.0, seed: int = 0) -> SynthesisResult:
        item = self.item(utterance_id)
        inputs = self.prepare(item.track, item.speaker_id, self.window(utterance_id))
        return self.infer(inputs, temperature, seed)

    def synthesize_text(
        self,
        text: str,
        speaker_id: str,
        neighbors_before: Sequence[str] = (),
        neighbors_after: Sequence[str] = (),
        temperature: float = 1.0,
        seed: int = 0,
    ) -> SynthesisResult:
        inputs = self.text_input(text, speaker_id, neighbors_before, neighbors_after)
        return self.infer(inputs, temperature, seed)

    def write(self, result: SynthesisResult, out_dir: Union[str, Path], name: str) -> SynthesisResult:
        out_dir = Path(out_dir)
        result.mel_path = write_mel(out_dir / f"{name}.mel", result.mel)
        result.wav = self.vocoder(result.mel)
        result.wav_path = write_wav(out_dir / f"{name}.wav", result.wav, self.audio)
        logger.info(f"Wrote {result.mel_path} and {result.wav_path}")
        return result


def _pad_window(utterance: Utterance, l: int) -> Utterance:
    """Pads (with empty text) or trims neighbor lists to exactly ``l`` each."""
    before = (("",) * l + tuple(utterance.neighbors_before))[-l:] if l else ()
    after = (tuple(utterance.neighbors_after) + ("",) * l)[:l]
    return Utterance(utterance.id, utterance.speaker_id, utterance.text, before, after)


def cmd_synthesize(
    config: RunConfig,
    checkpoint: Union[str, Path],
    out_dir: Union[str, Path],
    utterance_id: Optional[str] = None,
    text: Optional[str] = None,
    speaker_id: str = "",
    neighbors_before: Sequence[str] = (),
    neighbors_after: Sequence[str] = (),
    temperature: float = 1.0,
    seed: int = 0,
    reconstruct: bool = False,
    vocoder_path: Optional[str] = None,
) -> SynthesisResult:
    synthesizer = Synthesizer.from_checkpoint(checkpoint, config, vocoder=build_vocoder(vocoder_path))
    if utterance_id is not None:
        if reconstruct:
            result = synthesizer.reconstruct(utterance_id, seed=seed)
        else:
            result = synthesizer.synthesize_utterance(utterance_id, temperature, seed)
        name = utterance_id
    elif text:
        result = synthesizer.synthesize_text(
            text, speaker_id, neighbors_before, neighbors_after, temperature, seed
        )
        name = "synth"
    else:
        raise ModelInputError("give either an utterance id or text to synthesize")
    return synthesizer.write(result, out_dir, name)
