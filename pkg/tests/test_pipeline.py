import json

import numpy as np
import pytest
import soundfile as sf
import torch

from src.audio.frontend import expected_frames
from src.audio.mel_io import read_mel
from src.cli import build_parser, main
from src.corpus.records import EditScript, Utterance
from src.model.acoustic_model import prepare_input
from src.model.context_encoder import StubContextEncoder
from src.model.vocab import PhonemeVocab, SpeakerTable
from src.pipeline.checkpoint import build_model, list_checkpoints, load_checkpoint, save_checkpoint
from src.pipeline.dataset import load_index
from src.pipeline.editing import Editor
from src.pipeline.evaluation import cmd_evaluate, load_pairs
from src.pipeline.features import prepare_features
from src.pipeline.trainer import cmd_train
from src.utils.errors import CheckpointError, ConfigError, EditError, ManifestError, ModelInputError
from src.utils.run_config import apply_overrides, resolve_config

from tests.conftest import make_track, tone, toy_config_at, write_tone_corpus


def _cli_paths(root):
    return [
        "--preset", "toy",
        "--set", f"paths.manifest={root / 'corpus' / 'manifest.jsonl'}",
        "--set", f"paths.cache_dir={root / 'cache'}",
        "--set", f"paths.checkpoint_dir={root / 'checkpoints'}",
        "--run-dir", str(root / "run"),
    ]


class TestPrepare:
    def test_empty_manifest_gives_empty_index(self, tmp_path):
        (tmp_path / "corpus").mkdir()
        (tmp_path / "corpus" / "manifest.jsonl").write_text("", encoding="utf-8")
        assert main(["prepare", *_cli_paths(tmp_path)]) == 0
        assert (tmp_path / "cache" / "index.jsonl").read_text(encoding="utf-8") == ""

    def test_one_utterance(self, tmp_path):
        manifest = write_tone_corpus(tmp_path / "corpus")
        first = manifest.read_text(encoding="utf-8").splitlines()[0]
        manifest.write_text(first + "\n", encoding="utf-8")
        config = toy_config_at(tmp_path)
        prepare_features(config)

        items = load_index(config.paths.cache_dir)
        assert [item.id for item in items] == ["u0"]
        assert sorted(p.name for p in (tmp_path / "cache").glob("*.mel")) == ["u0.mel"]
        n_samples = sf.info(str(tmp_path / "corpus" / "u0.wav")).frames
        mel = items[0].load_mel(config.audio)
        assert mel.n_frames == expected_frames(n_samples, config.audio)
        assert items[0].track.n_frames == mel.n_frames

    def test_corrupt_audio_fails_the_command(self, tmp_path):
        write_tone_corpus(tmp_path / "corpus")
        (tmp_path / "corpus" / "u2.wav").write_bytes(b"not a wav file")
        assert main(["prepare", *_cli_paths(tmp_path)]) == 1
        assert not (tmp_path / "cache" / "index.jsonl").exists()


class TestCheckpoint:
    def _inputs(self, config):
        track = make_track([2, 1], durations=[3, 2, 4])
        utterance = Utterance("u", "s", "a b", ("x",), ("y",))
        mel = np.random.default_rng(0).normal(size=(9, 80))
        return prepare_input(
            track, "s", utterance, PhonemeVocab(), SpeakerTable(["s"]), StubContextEncoder(config.model.d_ctx), mel
        )

    def test_round_trip_forward_is_bit_identical(self, tmp_path):
        config = resolve_config(presets=["toy"])
        vocab, speakers = PhonemeVocab(), SpeakerTable(["s"])
        torch.manual_seed(0)
        model = build_model(config, vocab, speakers).eval()
        path = save_checkpoint(tmp_path, model, None, 7, config, vocab, speakers)
        loaded = load_checkpoint(path, config)
        assert loaded.step == 7
        assert (tmp_path / "latest.pt").exists()

        inputs, eps = self._inputs(config), torch.zeros(3, 2)
        with torch.no_grad():
            before = model.reconstruct(inputs, eps=eps).mel
            after = loaded.model.reconstruct(inputs, eps=eps).mel
        assert torch.equal(before, after)

    def test_directory_resolves_to_latest(self, tmp_path):
        config = resolve_config(presets=["toy"])
        vocab, speakers = PhonemeVocab(), SpeakerTable(["s"])
        model = build_model(config, vocab, speakers)
        save_checkpoint(tmp_path, model, None, 1, config, vocab, speakers)
        save_checkpoint(tmp_path, model, None, 10, config, vocab, speakers)
        assert load_checkpoint(tmp_path).step == 10
        assert [p.name for p in list_checkpoints(tmp_path)] == ["step_1.pt", "step_10.pt"]

    def test_model_config_mismatch(self, tmp_path):
        config = resolve_config(presets=["toy"])
        vocab, speakers = PhonemeVocab(), SpeakerTable(["s"])
        path = save_checkpoint(tmp_path, build_model(config, vocab, speakers), None, 1, config, vocab, speakers)
        other = apply_overrides(config, {"model.d_model": 64})
        with pytest.raises(CheckpointError, match="differs"):
            load_checkpoint(path, other)

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(tmp_path / "nope.pt")


class TestTraining:
    def _short(self, prepared_corpus, **overrides):
        config, _ = prepared_corpus
        return apply_overrides(config, {"train.steps": 3, "train.log_every": 1, **overrides})

    def test_zero_steps_saves_initial_weights(self, prepared_corpus, tmp_path):
        config = self._short(prepared_corpus, **{"train.steps": 0})
        result = cmd_train(config, "tts", tmp_path / "run", tmp_path / "ckpt")
        assert result.checkpoint_path.name == "step_0.pt"
        assert result.initial_recon is None
        assert json.loads((tmp_path / "run" / "loss_trace.json").read_text()) == []

    def test_traces_are_reproducible(self, prepared_corpus, tmp_path):
        config = self._short(prepared_corpus)
        a = cmd_train(config, "tts", tmp_path / "a", tmp_path / "ca")
        b = cmd_train(config, "tts", tmp_path / "b", tmp_path / "cb")
        assert a.loss_trace == b.loss_trace
        assert len(a.loss_trace) == 3
        assert (tmp_path / "a" / "loss_curve.png").exists()
        assert (tmp_path / "a" / "config.yaml").exists()

    def test_unit_loss_ratio_matches_uniform_weighting(self, prepared_corpus, tmp_path):
        steps = {"train.steps": 50, "train.lambda_mask": 1.0, "train.checkpoint_every": 50}
        biased = self._short(prepared_corpus, **steps)
        uniform = self._short(prepared_corpus, **steps, **{"train.frame_weighting": "uniform"})
        a = cmd_train(biased, "se", tmp_path / "a", tmp_path / "ca")
        b = cmd_train(uniform, "se", tmp_path / "b", tmp_path / "cb")
        assert len(a.loss_trace) == 50
        assert a.loss_trace == b.loss_trace

    def test_loss_ratio_changes_the_se_objective(self, prepared_corpus, tmp_path):
        a = cmd_train(self._short(prepared_corpus, **{"train.lambda_mask": 1.0}), "se", tmp_path / "a", tmp_path / "ca")
        b = cmd_train(self._short(prepared_corpus, **{"train.lambda_mask": 3.0}), "se", tmp_path / "b", tmp_path / "cb")
        assert a.loss_trace[0]["recon"] != b.loss_trace[0]["recon"]

    def test_unknown_mode(self, prepared_corpus, tmp_path):
        with pytest.raises(ConfigError, match="mode"):
            cmd_train(self._short(prepared_corpus), "vc", tmp_path / "a", tmp_path / "ca")


class TestSynthesis:
    def test_zero_temperature_ignores_the_seed(self, synthesizer):
        a = synthesizer.synthesize_utterance("u1", temperature=0.0, seed=1)
        b = synthesizer.synthesize_utterance("u1", temperature=0.0, seed=2)
        np.testing.assert_array_equal(a.mel.frames, b.mel.frames)

    def test_seeds_change_samples(self, synthesizer):
        a = synthesizer.synthesize_utterance("u1", temperature=1.0, seed=1)
        b = synthesizer.synthesize_utterance("u1", temperature=1.0, seed=2)
        assert a.durations == b.durations
        assert not np.allclose(a.mel.frames, b.mel.frames)

    def test_frame_budget_follows_durations(self, synthesizer):
        result = synthesizer.synthesize_utterance("u2", temperature=0.0)
        assert result.mel.n_frames == sum(result.durations)
        assert len(result.durations) == len(synthesizer.item("u2").track)

    def test_text_neighbors_change_the_output(self, synthesizer):
        a = synthesizer.synthesize_text("the old man", "spk1", ["mary asked the time"], ["we came back"], 0.0)
        b = synthesizer.synthesize_text("the old man", "spk1", ["she saw a light"], ["at night"], 0.0)
        assert a.mel.frames.shape != b.mel.frames.shape or not np.allclose(a.mel.frames, b.mel.frames)

    def test_text_without_known_words(self, synthesizer):
        with pytest.raises(ModelInputError, match="lexicon"):
            synthesizer.synthesize_text("zzqx blorf", "spk1")

    def test_unknown_utterance(self, synthesizer):
        with pytest.raises(ManifestError, match="unknown utterance"):
            synthesizer.synthesize_utterance("nope")

    def test_reconstruct_uses_reference_timing(self, synthesizer):
        result = synthesizer.reconstruct("u0", eps=None, seed=0)
        assert result.durations == list(synthesizer.item("u0").track.durations_frames)
        assert result.mel.n_frames == synthesizer.item("u0").track.n_frames

    def test_write(self, synthesizer, tmp_path):
        result = synthesizer.write(synthesizer.synthesize_utterance("u3", 0.0), tmp_path, "u3")
        np.testing.assert_allclose(read_mel(result.mel_path).frames, result.mel.frames.astype(np.float32))
        assert sf.info(str(result.wav_path)).samplerate == 22050


class TestEditing:
    def test_replace_frame_budget(self, synthesizer):
        editor = Editor(synthesizer)
        outcome = editor.apply(EditScript("u1", "replace", (1, 2), "little"))
        result_plan = outcome.plan
        assert outcome.mel.n_frames == sum(result_plan.phonemes_edited.durations_frames)
        assert outcome.mel.frames.shape[1] == 80

    def test_delete_keeps_other_words(self, synthesizer):
        editor = Editor(synthesizer)
        outcome = editor.apply(EditScript("u1", "delete", (3, 4)))
        original = synthesizer.item("u1").track
        assert outcome.plan.phonemes_edited.n_words == original.n_words - 1

    def test_mel_cut_keeps_original_frames_outside_the_edit(self, synthesizer):
        outcome = Editor(synthesizer).apply(EditScript("u1", "insert", (5, 5), "home"), mode="mel_cut")
        original = synthesizer.item("u1").load_mel(synthesizer.audio)
        n_kept = original.n_frames
        np.testing.assert_array_equal(outcome.mel.frames[:10], original.frames[:10])
        assert outcome.mel.n_frames >= n_kept

    def test_unknown_utterance(self, synthesizer):
        with pytest.raises(EditError, match="unknown utterance"):
            Editor(synthesizer).apply(EditScript("nope", "delete", (0, 1)))

    def test_unknown_mode(self, synthesizer):
        with pytest.raises(EditError, match="edit mode"):
            Editor(synthesizer).apply(EditScript("u1", "delete", (0, 1)), mode="crossfade")

    def test_cli_edit(self, trained, tmp_path):
        config, result = trained
        scripts = tmp_path / "edits.jsonl"
        scripts.write_text(
            json.dumps({"id": "u0", "op": "replace", "word_start": 0, "word_end": 1, "text": "she"}) + "\n",
            encoding="utf-8",
        )
        argv = [
            "edit",
            "--preset", "toy",
            "--set", f"paths.cache_dir={config.paths.cache_dir}",
            "--checkpoint", str(result.checkpoint_path),
            "--scripts", str(scripts),
            "--run-dir", str(tmp_path / "out"),
        ]
        assert main(argv) == 0
        assert (tmp_path / "out" / "u0_entire_0.wav").exists()
        assert (tmp_path / "out" / "u0_entire_0.mel").exists()

    def test_cli_edit_of_unknown_utterance_fails(self, trained, tmp_path):
        config, result = trained
        scripts = tmp_path / "edits.jsonl"
        scripts.write_text(
            json.dumps({"id": "missing", "op": "delete", "word_start": 0, "word_end": 1}) + "\n", encoding="utf-8"
        )
        argv = [
            "edit",
            "--preset", "toy",
            "--set", f"paths.cache_dir={config.paths.cache_dir}",
            "--checkpoint", str(result.checkpoint_path),
            "--scripts", str(scripts),
            "--run-dir", str(tmp_path / "out"),
        ]
        assert main(argv) == 1


class TestEvaluate:
    @pytest.fixture
    def pairs(self, tmp_path):
        sf.write(str(tmp_path / "ref.wav"), tone(220.0, 0.5), 22050)
        (tmp_path / "ref.wav.txt").write_text("the old man", encoding="utf-8")
        rows = [
            {"id": "same", "ref": "ref.wav", "hyp": "ref.wav", "text": "The old man."},
            {"id": "gone", "ref": "ref.wav", "hyp": "missing.wav"},
        ]
        path = tmp_path / "pairs.jsonl"
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", encoding="utf-8")
        return path

    def test_pairs_resolve_relative_paths(self, pairs):
        loaded = load_pairs(pairs)
        assert loaded[0]["ref"] == str(pairs.parent / "ref.wav")
        assert loaded[1]["text"] is None

    def test_reference_against_itself(self, pairs, tmp_path):
        report = cmd_evaluate(resolve_config(presets=["toy"]), pairs, tmp_path / "out")
        payload = json.loads(report.read_text(encoding="utf-8"))
        assert payload["n_items"] == 1
        item = payload["items"][0]
        assert item["ffe"] == 0.0
        assert item["mcd_db"] == 0.0
        assert item["wer"] == 0.0
        assert [s["id"] for s in payload["skipped"]] == ["gone"]
        assert (tmp_path / "out" / "metrics_items.csv").exists()

    def test_missing_transcript_keeps_the_other_metrics(self, tmp_path):
        sf.write(str(tmp_path / "ref.wav"), tone(220.0, 0.5), 22050)
        sf.write(str(tmp_path / "hyp.wav"), tone(230.0, 0.5), 22050)
        path = tmp_path / "pairs.jsonl"
        row = {"id": "x", "ref": "ref.wav", "hyp": "hyp.wav", "text": "a b"}
        path.write_text(json.dumps(row) + "\n", encoding="utf-8")
        report = cmd_evaluate(resolve_config(presets=["toy"]), path, tmp_path / "out")
        payload = json.loads(report.read_text(encoding="utf-8"))
        assert payload["skipped"] == []
        item = payload["items"][0]
        assert item["wer"] is None
        assert item["mcd_db"] > 0.0
        assert 0.0 <= item["ffe"] <= 1.0

    def test_bad_pairs_row(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        path.write_text('{"id": "x", "ref": "a.wav"}\n', encoding="utf-8")
        with pytest.raises(ManifestError, match="pairs.jsonl:1"):
            load_pairs(path)

    def test_cli_evaluate(self, pairs, tmp_path):
        assert main(["evaluate", "--preset", "toy", "--pairs", str(pairs), "--run-dir", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "metrics.json").exists()


class TestParser:
    def test_train_flags(self):
        args = build_parser().parse_args(
            ["train", "--mode", "se", "--preset", "toy", "--preset", "loss_ratio_2", "--set", "train.steps=5"]
        )
        assert args.mode == "se"
        assert args.preset == ["toy", "loss_ratio_2"]
        assert args.overrides == ["train.steps=5"]

    def test_synthesize_needs_a_source(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["synthesize", "--checkpoint", "x"])

    def test_unknown_preset_is_a_failed_run(self, tmp_path):
        assert main(["prepare", "--preset", "nope", "--run-dir", str(tmp_path)]) == 1
