import json
import math

import numpy as np
import pytest

from src.audio.frontend import ProsodyTracks
from src.evaluation.metrics import (
    MCD_CONSTANT,
    align_by_truncation,
    ffe,
    mcd,
    normalize_transcript,
    prosody_diversity,
    wer,
    word_edit_distance,
)
from src.evaluation.report import corpus_means, write_item_csv, write_report
from src.evaluation.transcriber import SidecarTranscriber
from src.utils.errors import MetricError

from tests.conftest import make_track


def _tracks(f0, energy=None) -> ProsodyTracks:
    f0 = np.asarray(f0, dtype=np.float64)
    energy = np.ones_like(f0) if energy is None else np.asarray(energy, dtype=np.float64)
    return ProsodyTracks(f0, energy, f0 > 0)


def _levenshtein_table(ref, hyp) -> int:
    table = [[0] * (len(hyp) + 1) for _ in range(len(ref) + 1)]
    for i in range(len(ref) + 1):
        for j in range(len(hyp) + 1):
            if i == 0 or j == 0:
                table[i][j] = i + j
            else:
                table[i][j] = min(
                    table[i - 1][j] + 1,
                    table[i][j - 1] + 1,
                    table[i - 1][j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1),
                )
    return table[-1][-1]


class TestFfe:
    def test_identical_tracks(self):
        track = _tracks([0, 120, 130, 0, 140])
        assert ffe(track, track).ffe == 0.0

    def test_planted_errors(self):
        ref = _tracks([0] + [200.0] * 9)
        est = _tracks([200.0, 0.0, 300.0] + [200.0] * 7)
        breakdown = ffe(ref, est)
        assert (breakdown.n_u_to_v, breakdown.n_v_to_u, breakdown.n_f0e) == (1, 1, 1)
        assert breakdown.ffe == pytest.approx(0.30, abs=1e-12)
        assert breakdown.vde_frames == 2
        assert breakdown.gpe_frames == 1

    def test_twenty_percent_is_not_a_pitch_error(self):
        ref = _tracks([220.0, 220.0])
        assert ffe(ref, _tracks([264.0, 220.0])).n_f0e == 0
        assert ffe(ref, _tracks([264.1, 220.0])).n_f0e == 1

    def test_length_mismatch(self):
        with pytest.raises(MetricError, match="differ in length"):
            ffe(_tracks([100.0]), _tracks([100.0, 100.0]))

    def test_zero_frames(self):
        with pytest.raises(MetricError):
            ffe(_tracks([]), _tracks([]))

    def test_same_permutation_leaves_ffe_unchanged(self, rng):
        ref_f0 = np.where(rng.random(30) < 0.3, 0.0, rng.uniform(80, 300, 30))
        est_f0 = np.where(rng.random(30) < 0.3, 0.0, rng.uniform(80, 300, 30))
        order = rng.permutation(30)
        assert ffe(_tracks(ref_f0), _tracks(est_f0)).ffe == ffe(
            _tracks(ref_f0[order]), _tracks(est_f0[order])
        ).ffe


class TestMcd:
    def test_identical(self, rng):
        mfcc = rng.normal(size=(6, 13))
        assert mcd(mfcc, mfcc) == 0.0

    def test_unit_distance(self):
        ref = np.zeros((1, 13))
        est = ref.copy()
        est[0, 4] = 1.0
        assert mcd(ref, est) == pytest.approx(6.1419, abs=1e-3)

    def test_frames_are_averaged(self):
        ref = np.zeros((2, 13))
        est = ref.copy()
        est[0, 0], est[1, 0] = 1.0, 3.0
        assert mcd(ref, est) == pytest.approx(12.2838, abs=1e-3)

    def test_matches_brute_force(self, rng):
        for _ in range(20):
            a, b = rng.normal(size=(5, 13)), rng.normal(size=(5, 13))
            total = 0.0
            for i in range(5):
                total += math.sqrt(sum((a[i, k] - b[i, k]) ** 2 for k in range(13)))
            assert abs(mcd(a, b) - MCD_CONSTANT * total / 5) <= 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(MetricError, match="shapes differ"):
            mcd(np.zeros((3, 13)), np.zeros((4, 13)))

    def test_truncation(self):
        a, b = align_by_truncation(np.zeros((5, 13)), np.ones((3, 13)))
        assert a.shape == b.shape == (3, 13)


class TestWer:
    def test_identical(self):
        assert wer("the old man", "The old man.") == 0.0

    def test_one_substitution(self):
        assert wer("a b c", "a x c") == pytest.approx(1 / 3)

    def test_empty_hypothesis(self):
        assert wer("a b c", "") == 1.0

    def test_insertions_can_exceed_one(self):
        assert wer("a", "a b c") == 2.0

    def test_empty_reference(self):
        with pytest.raises(MetricError):
            wer("!!", "a")

    def test_normalization(self):
        assert normalize_transcript("Hello, World!") == ["hello", "world"]

    def test_matches_dp_oracle_on_100_fixtures(self, rng):
        vocabulary = ["a", "b", "c", "d", "e"]
        for _ in range(100):
            ref = list(rng.choice(vocabulary, size=int(rng.integers(1, 8))))
            hyp = list(rng.choice(vocabulary, size=int(rng.integers(0, 8))))
            assert word_edit_distance(ref, hyp) == _levenshtein_table(ref, hyp)
            assert wer(" ".join(ref), " ".join(hyp)) == pytest.approx(_levenshtein_table(ref, hyp) / len(ref))


class TestProsodyDiversity:
    def test_two_samples_std(self):
        track = make_track([1, 1], durations=[3, 2])
        a = _tracks([100.0] * 3 + [150.0] * 2)
        b = _tracks([110.0] * 3 + [150.0] * 2)
        stats = prosody_diversity([a, b], track)
        # phoneme 0: std{100, 110} = 5; phoneme 1: 0
        assert stats.f0_std_hz == pytest.approx(2.5)
        assert stats.energy_std == pytest.approx(0.0)
        assert stats.n_phonemes == 2

    def test_single_phoneme_std_five(self):
        track = make_track([1], durations=[4])
        stats = prosody_diversity([_tracks([100.0] * 4), _tracks([110.0] * 4)], track)
        assert stats.f0_std_hz == pytest.approx(5.0)

    def test_identical_samples(self):
        track = make_track([2], durations=[2, 2])
        sample = _tracks([100.0, 120.0, 130.0, 90.0], [1.0, 2.0, 3.0, 4.0])
        stats = prosody_diversity([sample, sample, sample], track)
        assert stats.f0_std_hz == pytest.approx(0.0, abs=1e-12)
        assert stats.energy_std == pytest.approx(0.0, abs=1e-12)

    def test_relative_energy_ignores_overall_gain(self):
        track = make_track([2], durations=[2, 2])
        quiet = _tracks([100.0] * 4, [1.0, 1.0, 2.0, 2.0])
        loud = _tracks([100.0] * 4, [10.0, 10.0, 20.0, 20.0])
        assert prosody_diversity([quiet, loud], track).energy_std == pytest.approx(0.0, abs=1e-12)

    def test_unvoiced_phoneme_is_skipped(self):
        track = make_track([1, 1], durations=[2, 2])
        a = _tracks([0.0, 0.0, 100.0, 100.0])
        b = _tracks([120.0, 120.0, 110.0, 110.0])
        stats = prosody_diversity([a, b], track)
        assert stats.n_phonemes == 1
        assert stats.f0_std_hz == pytest.approx(5.0)

    def test_all_unvoiced(self):
        track = make_track([1], durations=[2])
        with pytest.raises(MetricError, match="unvoiced"):
            prosody_diversity([_tracks([0.0, 0.0]), _tracks([0.0, 0.0])], track)

    def test_single_sample(self):
        with pytest.raises(MetricError, match="at least 2"):
            prosody_diversity([_tracks([100.0])], make_track([1], durations=[1]))

    def test_short_sample(self):
        with pytest.raises(MetricError, match="durations need"):
            prosody_diversity([_tracks([100.0]), _tracks([100.0])], make_track([1], durations=[2]))


class TestReports:
    def test_means_skip_missing_values(self):
        items = [{"ffe": 0.2, "mcd_db": 4.0, "wer": None}, {"ffe": 0.4, "mcd_db": 6.0, "wer": 0.5}]
        means = corpus_means(items)
        assert means.ffe == pytest.approx(0.3)
        assert means.mcd_db == pytest.approx(5.0)
        assert means.wer == pytest.approx(0.5)
        assert means.f0_std_hz is None

    def test_report_layout(self, tmp_path):
        items = [{"id": "a", "ffe": np.float64(0.1)}]
        path = write_report(items, tmp_path / "m.json", [{"id": "b", "error": "missing"}])
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert set(payload) == {"means", "n_items", "items", "skipped"}
        assert payload["n_items"] == 1
        assert payload["means"]["ffe"] == pytest.approx(0.1)
        assert payload["skipped"][0]["id"] == "b"

    def test_empty_report(self, tmp_path):
        payload = json.loads(write_report([], tmp_path / "m.json").read_text(encoding="utf-8"))
        assert payload["means"]["ffe"] is None

    def test_item_csv_has_bom(self, tmp_path):
        path = write_item_csv([{"id": "a", "ffe": 0.1}], tmp_path / "items.csv")
        assert path.read_bytes().startswith(b"\xef\xbb\xbf")


class TestTranscriber:
    def test_sidecar(self, tmp_path):
        audio = tmp_path / "x.wav"
        (tmp_path / "x.wav.txt").write_text(" hello world\n", encoding="utf-8")
        assert SidecarTranscriber().transcribe(audio) == "hello world"

    def test_missing_sidecar(self, tmp_path):
        with pytest.raises(MetricError, match="no transcript"):
            SidecarTranscriber().transcribe(tmp_path / "y.wav")
