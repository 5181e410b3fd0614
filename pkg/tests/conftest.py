"""Shared fixtures: toy config, a synthetic tone corpus and a trained toy model."""

import json
from pathlib import Path

import numpy as np
import pytest
import soundfile as sf

from src.audio.frontend import AudioConfig, MelSpectrogram
from src.corpus.lexicon import default_lexicon
from src.corpus.records import PhonemeTrack
from src.model.vocab import PhonemeVocab
from src.utils.run_config import apply_overrides, resolve_config

PHONEME_SECONDS = 0.08
TOY_UTTERANCES = [
    ("u0", "spk1", "mary asked the time"),
    ("u1", "spk1", "the old man went home"),
    ("u2", "spk2", "she saw a little light"),
    ("u3", "spk2", "we came back at night"),
]


def make_track(words, durations=None) -> PhonemeTrack:
    """Track from per-word phoneme counts, e.g. ``[2, 3]``; durations default to 2 frames."""
    phonemes, spans = [], []
    for n in words:
        spans.append((len(phonemes), len(phonemes) + n))
        phonemes.extend(["AH"] * n)
    if durations is None:
        durations = [2] * len(phonemes)
    return PhonemeTrack(tuple(phonemes), tuple(durations), tuple(spans))


def tone(freq_hz: float, seconds: float, sr: int = 22050, amplitude: float = 0.5) -> np.ndarray:
    t = np.arange(int(round(seconds * sr))) / sr
    return amplitude * np.sin(2 * np.pi * freq_hz * t)


def write_tone_corpus(root: Path, audio: AudioConfig = AudioConfig()) -> Path:
    """Each phoneme is a harmonic tone whose pitch depends on the phoneme."""
    root.mkdir(parents=True, exist_ok=True)
    lexicon, vocab = default_lexicon(), PhonemeVocab()
    sr = audio.sample_rate_hz
    rows = []
    for utt_id, speaker, text in TOY_UTTERANCES:
        track = lexicon.g2p(text)
        word_of = {}
        for w, (a, b) in enumerate(track.word_spans):
            word_of.update({p: w for p in range(a, b)})
        chunks, lines, phase = [], [], 0.0
        n_per_phoneme = int(round(PHONEME_SECONDS * sr))
        for p, symbol in enumerate(track.phonemes):
            freq = 120.0 + 6.0 * (vocab.index(symbol) % 25)
            t = np.arange(n_per_phoneme) / sr
            wave = 0.4 * np.sin(phase + 2 * np.pi * freq * t) + 0.1 * np.sin(2 * phase + 4 * np.pi * freq * t)
            phase += 2 * np.pi * freq * n_per_phoneme / sr
            chunks.append(wave)
            start, end = p * PHONEME_SECONDS, (p + 1) * PHONEME_SECONDS
            lines.append(f"{symbol}\t{start:.4f}\t{end:.4f}\t{word_of[p]}")
        sf.write(str(root / f"{utt_id}.wav"), np.concatenate(chunks), sr)
        (root / f"{utt_id}.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
        rows.append(
            {
                "id": utt_id,
                "speaker": speaker,
                "text": text,
                "audio": f"{utt_id}.wav",
                "alignment": f"{utt_id}.tsv",
                "split": "train",
            }
        )
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
    return manifest


def toy_config_at(root: Path, **overrides):
    config = resolve_config(presets=["toy"])
    paths = {
        "paths.manifest": str(root / "corpus" / "manifest.jsonl"),
        "paths.cache_dir": str(root / "cache"),
        "paths.checkpoint_dir": str(root / "checkpoints"),
        "paths.run_dir": str(root / "run"),
    }
    paths.update(overrides)
    return apply_overrides(config, paths)


@pytest.fixture
def toy_config(tmp_path):
    return toy_config_at(tmp_path)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def prepared_corpus(tmp_path_factory):
    """(config, root) of the tone corpus with features already prepared."""
    from src.pipeline.features import prepare_features

    root = tmp_path_factory.mktemp("toy")
    write_tone_corpus(root / "corpus")
    config = toy_config_at(root, **{"train.steps": 2000, "train.checkpoint_every": 500})
    prepare_features(config)
    return config, root


@pytest.fixture(scope="session")
def trained(prepared_corpus):
    from src.pipeline.trainer import cmd_train

    config, _ = prepared_corpus
    return config, cmd_train(config, "tts")


class ToneVocoder:
    """Test vocoder: a fixed 220 Hz tone whose per-frame amplitude follows the mel energy."""

    def __init__(self, audio: AudioConfig = AudioConfig()):
        self.audio = audio

    def __call__(self, mel: MelSpectrogram) -> np.ndarray:
        hop, sr = self.audio.hop_length, self.audio.sample_rate_hz
        level = np.exp(mel.frames.mean(axis=1))
        envelope = np.repeat(level / level.max(), hop)
        t = np.arange(envelope.size) / sr
        return 0.1 * np.sin(2 * np.pi * 220.0 * t) * (0.5 + envelope)


@pytest.fixture(scope="session")
def synthesizer(trained):
    from src.pipeline.synthesis import Synthesizer

    config, result = trained
    return Synthesizer.from_checkpoint(result.checkpoint_path, config, vocoder=ToneVocoder(config.audio))


class CentroidPitchVocoder:
    """Test vocoder: a tone whose per-frame pitch follows the mel's spectral centroid."""

    def __init__(self, audio: AudioConfig = AudioConfig()):
        self.audio = audio

    def __call__(self, mel: MelSpectrogram) -> np.ndarray:
        frames = mel.frames
        weights = np.exp(frames - frames.max(axis=1, keepdims=True))
        centroid = (weights * np.arange(frames.shape[1])).sum(axis=1) / weights.sum(axis=1)
        f0 = 100.0 + 250.0 * centroid / (frames.shape[1] - 1)
        per_sample = np.repeat(f0, self.audio.hop_length)
        phase = 2 * np.pi * np.cumsum(per_sample) / self.audio.sample_rate_hz
        return 0.3 * np.sin(phase)
