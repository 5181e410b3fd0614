"""Deterministic DSP front end.

waveform -> log-mel, F0 / energy tracks and MFCCs, plus a Griffin-Lim
fallback for turning a log-mel back into audio. Every function is a pure
function of its inputs.
"""

import functools
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import librosa
import numpy as np
import scipy.fft
import soundfile as sf

from src.utils.errors import AudioError, ConfigError

logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-5
F0_MIN_HZ = 60.0
F0_MAX_HZ = 500.0
VOICING_THRESHOLD = 0.3
# Smallest lag whose autocorrelation is within this ratio of the best wins (octave errors).
PEAK_RATIO = 0.9
SILENCE_ENERGY = 1e-10
PEAK_LEVEL = 0.95


@dataclass(frozen=True)
class AudioConfig:
    sample_rate_hz: int = 22050
    fft_size: int = 1024
    hop_length: int = 256
    win_length: int = 1024
    n_mels: int = 80
    fmin_hz: float = 0.0
    fmax_hz: float = 8000.0

    def __post_init__(self):
        if not 0 < self.hop_length <= self.win_length <= self.fft_size:
            raise ConfigError(
                f"need 0 < hop ({self.hop_length}) <= win ({self.win_length}) <= fft ({self.fft_size})"
            )
        if self.n_mels != 80:
            raise ConfigError(f"n_mels must be 80 to match the decoder, got {self.n_mels}")
        if not 0 <= self.fmin_hz < self.fmax_hz <= self.sample_rate_hz / 2:
            raise ConfigError("need 0 <= fmin < fmax <= sample_rate / 2")

    @property
    def frames_per_second(self) -> float:
        return self.sample_rate_hz / self.hop_length


@dataclass(frozen=True, eq=False)
class MelSpectrogram:
    frames: np.ndarray  # [n_frames, n_mels] natural-log amplitudes
    config: AudioConfig = AudioConfig()

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise AudioError(f"mel must be 2-D [n_frames, n_mels], got shape {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise AudioError("mel contains non-finite values")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True, eq=False)
class ProsodyTracks:
    f0_hz: np.ndarray  # 0 where unvoiced
    energy: np.ndarray  # L2 norm of the frame's magnitude spectrum
    voiced_mask: np.ndarray

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64)
        energy = np.asarray(self.energy, dtype=np.float64)
        voiced = np.asarray(self.voiced_mask, dtype=bool)
        if not f0.shape == energy.shape == voiced.shape:
            raise AudioError("f0, energy and voiced_mask must have equal length")
        if np.any((f0 > 0) != voiced):
            raise AudioError("f0 > 0 must coincide with voiced frames")
        if np.any(energy < 0):
            raise AudioError("energy must be non-negative")
        object.__setattr__(self, "f0_hz", f0)
        object.__setattr__(self, "energy", energy)
        object.__setattr__(self, "voiced_mask", voiced)

    @property
    def n_frames(self) -> int:
        return self.f0_hz.shape[0]

    def truncate(self, n_frames: int) -> "ProsodyTracks":
        return ProsodyTracks(
            self.f0_hz[:n_frames], self.energy[:n_frames], self.voiced_mask[:n_frames]
        )


def _check_samples(samples, config: AudioConfig) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise AudioError(f"expected mono samples, got shape {samples.shape}")
    if samples.size == 0:
        raise AudioError("empty audio")
    if not np.all(np.isfinite(samples)):
        raise AudioError("audio contains non-finite samples")
    if samples.size < config.win_length:
        raise AudioError(
            f"audio has {samples.size} samples, fewer than win_length={config.win_length}"
        )
    return samples


@functools.lru_cache(maxsize=8)
def mel_basis(config: AudioConfig) -> np.ndarray:
    """[n_mels, 1 + fft/2] Slaney-normalized filterbank."""
    return librosa.filters.mel(
        sr=config.sample_rate_hz,
        n_fft=config.fft_size,
        n_mels=config.n_mels,
        fmin=config.fmin_hz,
        fmax=config.fmax_hz,
        dtype=np.float64,
    )


@functools.lru_cache(maxsize=8)
def mel_pseudo_inverse(config: AudioConfig) -> np.ndarray:
    return np.linalg.pinv(mel_basis(config))


def magnitude_spectrogram(samples, config: AudioConfig = AudioConfig()) -> np.ndarray:
    """|STFT| as [1 + fft/2, n_frames]; frames centered with reflection padding."""
    samples = _check_samples(samples, config)
    return np.abs(
        librosa.stft(
            samples,
            n_fft=config.fft_size,
            hop_length=config.hop_length,
            win_length=config.win_length,
            window="hann",
            center=True,
            pad_mode="reflect",
        )
    )


def wav_to_mel(samples, config: AudioConfig = AudioConfig()) -> MelSpectrogram:
    magnitude = magnitude_spectrogram(samples, config)
    mel = mel_basis(config) @ magnitude
    return MelSpectrogram(np.log(np.maximum(mel, LOG_FLOOR)).T, config)


def expected_frames(n_samples: int, config: AudioConfig = AudioConfig()) -> int:
    return 1 + n_samples // config.hop_length


def extract_f0(samples, config: AudioConfig = AudioConfig()) -> ProsodyTracks:
    """Autocorrelation pitch tracker, frame-synchronous with :func:`wav_to_mel`.

    Each centered frame of ``fft_size`` samples is mean-removed and its
    normalized autocorrelation is searched over lags for 60-500 Hz. A frame
    is voiced when the best normalized correlation exceeds 0.3; the chosen
    lag is the smallest local peak within ``PEAK_RATIO`` of the best,
    refined by parabolic interpolation.
    """
    samples = _check_samples(samples, config)
    energy = np.linalg.norm(magnitude_spectrogram(samples, config), axis=0)

    pad = config.fft_size // 2
    padded = np.pad(samples, pad, mode="reflect")
    frames = librosa.util.frame(
        padded, frame_length=config.fft_size, hop_length=config.hop_length, axis=0
    )
    frames = frames - frames.mean(axis=1, keepdims=True)
    n = frames.shape[1]

    spectrum = np.fft.rfft(frames, n=2 * n, axis=1)
    autocorr = np.fft.irfft(np.abs(spectrum) ** 2, n=2 * n, axis=1)[:, :n]

    sr = config.sample_rate_hz
    lags = np.arange(int(np.ceil(sr / F0_MAX_HZ)), int(np.floor(sr / F0_MIN_HZ)) + 1)
    lags = lags[lags < n - 1]
    cumulative = np.cumsum(frames**2, axis=1)
    total = cumulative[:, -1]
    head = cumulative[:, n - lags - 1]
    tail = total[:, None] - cumulative[:, lags - 1]
    denom = np.sqrt(np.maximum(head * tail, 0.0))
    corr = np.where(denom > 0, autocorr[:, lags] / np.where(denom > 0, denom, 1.0), 0.0)

    f0 = np.zeros(frames.shape[0])
    for i, row in enumerate(corr):
        best = row.max()
        if total[i] < SILENCE_ENERGY or best <= VOICING_THRESHOLD:
            continue
        k = _first_strong_peak(row, PEAK_RATIO * best)
        offset = 0.0
        if 0 < k < len(row) - 1:
            curvature = row[k - 1] - 2 * row[k] + row[k + 1]
            if curvature < 0:
                offset = 0.5 * (row[k - 1] - row[k + 1]) / curvature
        f0[i] = sr / (lags[k] + offset)

    return ProsodyTracks(f0, energy[: len(f0)], f0 > 0)


def _first_strong_peak(row: np.ndarray, floor: float) -> int:
    left = np.concatenate(([-np.inf], row[:-1]))
    right = np.concatenate((row[1:], [-np.inf]))
    peaks = np.flatnonzero((row >= left) & (row >= right) & (row >= floor))
    return int(peaks[0]) if peaks.size else int(np.argmax(row))


def mel_to_mfcc(mel: MelSpectrogram, n_coeffs: int = 13) -> np.ndarray:
    """Orthonormal type-II DCT of each log-mel row, first ``n_coeffs`` kept."""
    n_mels = mel.frames.shape[1]
    if not 1 <= n_coeffs <= n_mels:
        raise AudioError(f"n_coeffs must lie in [1, {n_mels}], got {n_coeffs}")
    return scipy.fft.dct(mel.frames, type=2, norm="ortho", axis=1)[:, :n_coeffs]


def mel_to_wav_fallback(
    mel: MelSpectrogram, iterations: int = 60, peak: Optional[float] = PEAK_LEVEL
) -> np.ndarray:
    """Griffin-Lim inversion through the pseudo-inverse mel filterbank.

    Phase starts at zero so the result is deterministic. ``peak=None``
    skips peak normalization.
    """
    config = mel.config
    if mel.n_frames == 0:
        return np.zeros(0)
    magnitude = np.exp(mel.frames.T)
    linear = np.maximum(mel_pseudo_inverse(config) @ magnitude, 0.0)
    wav = librosa.griffinlim(
        linear,
        n_iter=max(0, int(iterations)),
        hop_length=config.hop_length,
        win_length=config.win_length,
        n_fft=config.fft_size,
        window="hann",
        center=True,
        init=None,
    )
    wav = np.nan_to_num(np.asarray(wav, dtype=np.float64))
    if peak is not None:
        top = np.max(np.abs(wav)) if wav.size else 0.0
        if top > 0:
            wav = wav * (peak / top)
    return wav


def load_wav(path: Union[str, Path], config: AudioConfig = AudioConfig()) -> np.ndarray:
    try:
        data, sr = sf.read(str(path), dtype="float64", always_2d=True)
    except Exception as e:
        raise AudioError(f"{path}: cannot read audio ({e})") from e
    samples = data.mean(axis=1)
    if sr != config.sample_rate_hz:
        logger.debug(f"Resampling {path} from {sr} Hz to {config.sample_rate_hz} Hz")
        samples = librosa.resample(samples, orig_sr=sr, target_sr=config.sample_rate_hz)
    if samples.size == 0 or not np.all(np.isfinite(samples)):
        raise AudioError(f"{path}: empty or non-finite audio")
    return samples


def write_wav(path: Union[str, Path], samples, config: AudioConfig = AudioConfig()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sf.write(str(path), np.asarray(samples, dtype=np.float64), config.sample_rate_hz)
    return path
