"""MEL1 cache container.

Header: magic ``b"MEL1"`` then little-endian u32 ``n_frames, n_cols,
sample_rate, hop``; body: row-major little-endian float32. Mel caches have
80 columns; prosody caches reuse the container with 2 columns
(f0_hz, energy).
"""

import struct
from dataclasses import replace
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from src.audio.frontend import AudioConfig, MelSpectrogram, ProsodyTracks
from src.utils.errors import AudioError

MAGIC = b"MEL1"
_HEADER = struct.Struct("<4sIIII")


def encode_matrix(matrix: np.ndarray, sample_rate: int, hop: int) -> bytes:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise AudioError(f"MEL1 stores 2-D matrices, got shape {matrix.shape}")
    n_frames, n_cols = matrix.shape
    header = _HEADER.pack(MAGIC, n_frames, n_cols, int(sample_rate), int(hop))
    return header + np.ascontiguousarray(matrix, dtype="<f4").tobytes()


def decode_matrix(payload: bytes, source: str = "<bytes>") -> Tuple[np.ndarray, int, int]:
    if len(payload) < _HEADER.size:
        raise AudioError(f"{source}: truncated MEL1 header")
    magic, n_frames, n_cols, sample_rate, hop = _HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise AudioError(f"{source}: bad magic {magic!r}")
    expected = _HEADER.size + 4 * n_frames * n_cols
    if len(payload) != expected:
        raise AudioError(f"{source}: expected {expected} bytes, found {len(payload)}")
    body = np.frombuffer(payload, dtype="<f4", offset=_HEADER.size)
    return body.reshape(n_frames, n_cols).astype(np.float64), sample_rate, hop


def write_matrix(path: Union[str, Path], matrix: np.ndarray, sample_rate: int, hop: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_matrix(matrix, sample_rate, hop))
    return path


def read_matrix(path: Union[str, Path]) -> Tuple[np.ndarray, int, int]:
    path = Path(path)
    if not path.exists():
        raise AudioError(f"{path}: MEL1 file not found")
    return decode_matrix(path.read_bytes(), str(path))


def write_mel(path: Union[str, Path], mel: MelSpectrogram) -> Path:
    return write_matrix(path, mel.frames, mel.config.sample_rate_hz, mel.config.hop_length)


def read_mel(path: Union[str, Path], config: AudioConfig = AudioConfig()) -> MelSpectrogram:
    frames, sample_rate, hop = read_matrix(path)
    if frames.shape[1] != config.n_mels:
        raise AudioError(f"{path}: expected {config.n_mels} mel bins, found {frames.shape[1]}")
    if sample_rate != config.sample_rate_hz or hop != config.hop_length:
        config = replace(config, sample_rate_hz=sample_rate, hop_length=hop)
    return MelSpectrogram(frames, config)


def write_prosody(path: Union[str, Path], tracks: ProsodyTracks, config: AudioConfig) -> Path:
    matrix = np.stack([tracks.f0_hz, tracks.energy], axis=1)
    return write_matrix(path, matrix, config.sample_rate_hz, config.hop_length)


def read_prosody(path: Union[str, Path]) -> ProsodyTracks:
    matrix, _, _ = read_matrix(path)
    if matrix.shape[1] != 2:
        raise AudioError(f"{path}: prosody cache needs 2 columns, found {matrix.shape[1]}")
    f0 = matrix[:, 0]
    return ProsodyTracks(f0, matrix[:, 1], f0 > 0)
