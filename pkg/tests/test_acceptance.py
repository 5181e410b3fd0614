"""End-to-end checks on the toy tone corpus (``pytest -m slow``)."""

import numpy as np
import pytest

from src.corpus.records import EditScript, Utterance
from src.pipeline.editing import Editor
from src.pipeline.evaluation import sample_diversity
from src.pipeline.synthesis import Synthesizer

from tests.conftest import CentroidPitchVocoder

pytestmark = pytest.mark.slow


def test_toy_model_overfits(trained):
    _, result = trained
    assert result.final_recon < 0.5 * result.initial_recon


def test_zero_temperature_has_no_prosody_spread(synthesizer):
    stats, _ = sample_diversity(synthesizer, "u1", n_samples=4, temperature=0.0, seed=3)
    assert stats.f0_std_hz < 1e-6
    assert stats.energy_std < 1e-6


def test_sampling_spreads_energy(synthesizer):
    stats, durations = sample_diversity(synthesizer, "u1", n_samples=4, temperature=1.0, seed=3)
    assert stats.energy_std > 0
    assert len(durations) == len(synthesizer.item("u1").track)


def test_sampling_spreads_pitch(trained):
    config, result = trained
    synthesizer = Synthesizer.from_checkpoint(
        result.checkpoint_path, config, vocoder=CentroidPitchVocoder(config.audio)
    )
    stats, _ = sample_diversity(synthesizer, "u1", n_samples=4, temperature=1.0, seed=3)
    assert stats.n_phonemes > 0
    assert stats.f0_std_hz > 0


def test_neighbor_text_reaches_the_mel(synthesizer):
    item = synthesizer.item("u2")
    window = synthesizer.window("u2")
    swapped = Utterance(
        window.id, window.speaker_id, window.text, ("we came back at night",), ("mary asked the time",)
    )
    a = synthesizer.infer(synthesizer.prepare(item.track, item.speaker_id, window), 0.0)
    b = synthesizer.infer(synthesizer.prepare(item.track, item.speaker_id, swapped), 0.0)
    assert a.durations != b.durations or not np.allclose(a.mel.frames, b.mel.frames)


def test_every_edit_operation_runs(synthesizer, tmp_path):
    editor = Editor(synthesizer)
    scripts = [
        EditScript("u3", "replace", (0, 1), "she"),
        EditScript("u3", "insert", (2, 2), "home"),
        EditScript("u3", "delete", (4, 5)),
    ]
    for i, script in enumerate(scripts):
        for mode in ("entire", "mel_cut", "wave_cut"):
            outcome = editor.write(editor.apply(script, mode, seed=i), tmp_path, f"{i}_{mode}")
            assert outcome.wav_path.exists()
            assert np.all(np.isfinite(outcome.wav))
