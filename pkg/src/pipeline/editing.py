"""Speech editing from edit scripts: entire inference and the splice baselines."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import torch

from src.audio.frontend import MelSpectrogram, load_wav, write_wav
from src.audio.mel_io import write_mel
from src.corpus.edit_script import load_edit_scripts
from src.corpus.lexicon import normalize_words
from src.corpus.records import EditScript, PhonemeTrack, Utterance
from src.editing.edit_infer import EditResult, edit_infer, splice_mel, splice_waveform
from src.editing.edit_plan import EditPlan, build_edit_plan
from src.pipeline.synthesis import Synthesizer
from src.pipeline.vocoder import build_vocoder
from src.utils.errors import EditError, ManifestError
from src.utils.run_config import RunConfig
from src.utils.seeding import noise_generator

logger = logging.getLogger(__name__)

EDIT_MODES = ("entire", "mel_cut", "wave_cut")


@dataclass
class EditOutcome:
    script: EditScript
    mode: str
    mel: MelSpectrogram
    plan: EditPlan
    wav: Optional[np.ndarray] = None
    mel_path: Optional[Path] = None
    wav_path: Optional[Path] = None


def edited_text(text: str, track: PhonemeTrack, script: EditScript) -> str:
    """Transcript after the edit; falls back to the original when words and alignment disagree."""
    words = normalize_words(text)
    if len(words) != track.n_words:
        logger.warning(
            f"{script.utterance_id}: transcript has {len(words)} words, alignment {track.n_words}; "
            "keeping the original transcript for context"
        )
        return text
    start, end = script.target_word_span
    edited = words[:start] + normalize_words(script.replacement_text) + words[end:]
    return " ".join(edited) or text


class Editor:
    def __init__(self, synthesizer: Synthesizer):
        if synthesizer.corpus is None:
            raise EditError("editing needs the prepared corpus of the original utterances")
        self.synthesizer = synthesizer

    def plan(self, script: EditScript) -> EditPlan:
        item = self.synthesizer.item(script.utterance_id)
        replacement = None
        if script.operation != "delete":
            replacement = self.synthesizer.lexicon.g2p(script.replacement_text)
        return build_edit_plan(item.track, script, replacement)

    def run(
        self,
        script: EditScript,
        eps: Optional[torch.Tensor] = None,
        seed: int = 0,
    ) -> EditResult:
        synth = self.synthesizer
        try:
            item = synth.item(script.utterance_id)
        except ManifestError as e:
            raise EditError(f"edit script references unknown utterance {script.utterance_id!r}") from e
        plan = self.plan(script)
        window = synth.window(script.utterance_id)
        utterance = Utterance(
            window.id,
            window.speaker_id,
            edited_text(item.text, item.track, script),
            window.neighbors_before,
            window.neighbors_after,
        )
        inputs = synth.prepare(plan.phonemes_edited, item.speaker_id, utterance)
        return edit_infer(
            synth.model,
            item.load_mel(synth.audio),
            plan,
            inputs,
            eps=eps,
            generator=noise_generator(seed),
        )

    def apply(self, script: EditScript, mode: str = "entire", seed: int = 0, eps=None) -> EditOutcome:
        if mode not in EDIT_MODES:
            raise EditError(f"edit mode must be one of {EDIT_MODES}, got {mode!r}")
        synth = self.synthesizer
        result = self.run(script, eps=eps, seed=seed)
        item = synth.item(script.utterance_id)
        mel, wav = result.mel, None
        if mode == "mel_cut":
            mel = splice_mel(item.load_mel(synth.audio), result.mel, result.plan)
        elif mode == "wave_cut":
            original_wav = load_wav(item.audio_path, synth.audio)
            wav = splice_waveform(original_wav, synth.vocoder(result.mel), result.plan, synth.audio.hop_length)
        return EditOutcome(script, mode, mel, result.plan, wav)

    def write(self, outcome: EditOutcome, out_dir: Union[str, Path], name: str) -> EditOutcome:
        out_dir = Path(out_dir)
        synth = self.synthesizer
        outcome.mel_path = write_mel(out_dir / f"{name}.mel", outcome.mel)
        if outcome.wav is None:
            outcome.wav = synth.vocoder(outcome.mel)
        outcome.wav_path = write_wav(out_dir / f"{name}.wav", outcome.wav, synth.audio)
        logger.info(f"Wrote {outcome.mode} edit of {outcome.script.utterance_id} to {outcome.mel_path}")
        return outcome


def cmd_edit(
    config: RunConfig,
    checkpoint: Union[str, Path],
    edit_scripts: Union[str, Path],
    out_dir: Union[str, Path],
    mode: str = "entire",
    seed: int = 0,
    vocoder_path: Optional[str] = None,
) -> List[EditOutcome]:
    scripts = load_edit_scripts(edit_scripts)
    editor = Editor(Synthesizer.from_checkpoint(checkpoint, config, vocoder=build_vocoder(vocoder_path)))
    outcomes = []
    for i, script in enumerate(scripts):
        outcome = editor.apply(script, mode, seed)
        outcomes.append(editor.write(outcome, out_dir, f"{script.utterance_id}_{mode}_{i}"))
    return outcomes
