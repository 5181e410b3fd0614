from .frontend import (
    AudioConfig,
    MelSpectrogram,
    ProsodyTracks,
    extract_f0,
    load_wav,
    mel_to_mfcc,
    mel_to_wav_fallback,
    wav_to_mel,
    write_wav,
)
from .mel_io import read_mel, read_prosody, write_mel, write_prosody
