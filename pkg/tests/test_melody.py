from __future__ import annotations

import json

import pytest
from scipy.stats import chisquare

from croon.errors import InsufficientMaterialError, NotFoundError, ParameterError
from croon.melody import (
    MelodyRegistry,
    RandomMelodyParams,
    WindowRequest,
    generate_random_melody,
    load_dataset,
    sample_window,
    select_main_melody,
)
from croon.score import Melody, MelodySource, Note, Phrase, SourceGroup, melody_to_json, validate_melody

from midi_writer import write_midi


class TestGenerateRandom:
    def test_degenerate_ranges_force_output(self):
        params = RandomMelodyParams(
            n_notes=1, pitch_low=60, pitch_high=60, dur_low_s=0.5, dur_high_s=0.5, seed=99
        )
        m = generate_random_melody(params)
        assert [(n.pitch, n.start_s, n.end_s) for n in m.notes] == [(60, 0.0, 0.5)]

    def test_same_seed_same_melody(self):
        a = generate_random_melody(RandomMelodyParams(n_notes=5, seed=7))
        b = generate_random_melody(RandomMelodyParams(n_notes=5, seed=7))
        assert melody_to_json(a) == melody_to_json(b)

    def test_different_seed_differs(self):
        a = generate_random_melody(RandomMelodyParams(n_notes=20, seed=1))
        b = generate_random_melody(RandomMelodyParams(n_notes=20, seed=2))
        assert melody_to_json(a) != melody_to_json(b)

    def test_contiguous_no_rests(self):
        m = generate_random_melody(RandomMelodyParams(n_notes=30, seed=3))
        assert m.notes[0].start_s == 0.0
        for a, b in zip(m.notes, m.notes[1:]):
            assert a.end_s == b.start_s
        assert m.phrases is None and m.source_groups is None

    def test_always_valid(self):
        for seed in range(50):
            m = generate_random_melody(RandomMelodyParams(n_notes=17, seed=seed))
            assert validate_melody(m) == []

    def test_invalid_params(self):
        with pytest.raises(ParameterError):
            generate_random_melody(RandomMelodyParams(n_notes=0))
        with pytest.raises(ParameterError):
            generate_random_melody(RandomMelodyParams(n_notes=1, dur_low_s=0.0))
        with pytest.raises(ParameterError):
            generate_random_melody(RandomMelodyParams(n_notes=1, pitch_low=70, pitch_high=60))

    def test_pitch_histogram_uniform(self):
        # 1e5 pitches over [60, 72]; chi-square should not reject at p > 0.001
        counts = [0] * 13
        drawn = 0
        seed = 0
        while drawn < 100_000:
            m = generate_random_melody(RandomMelodyParams(n_notes=1000, seed=seed))
            for n in m.notes:
                counts[n.pitch - 60] += 1
            drawn += 1000
            seed += 1
        result = chisquare(counts)
        assert result.pvalue > 0.001

    def test_large_jump_expectation(self):
        # pair enumeration over [60, 72]: 56 of 169 ordered pairs differ by > 5
        pairs = [(a, b) for a in range(60, 73) for b in range(60, 73)]
        expected = sum(1 for a, b in pairs if abs(a - b) > 5) / len(pairs)
        assert expected == pytest.approx(56 / 169)

        total = 0.0
        trials = 10_000
        for seed in range(trials):
            m = generate_random_melody(RandomMelodyParams(n_notes=50, seed=seed))
            p = m.pitches()
            jumps = sum(1 for x, y in zip(p, p[1:]) if abs(x - y) > 5)
            total += jumps / (len(p) - 1)
        assert total / trials == pytest.approx(expected, abs=0.01)


class TestSelectMain:
    def track(self, n, mean_pitch):
        notes = tuple(Note(mean_pitch, i * 0.5, i * 0.5 + 0.4) for i in range(n))
        return Melody(id=f"t{n}-{mean_pitch}", source=MelodySource.DATASET, notes=notes)

    def test_single(self):
        t = self.track(3, 60)
        assert select_main_melody([t]) is t

    def test_note_count_dominates(self):
        a, b = self.track(100, 62), self.track(40, 70)
        assert select_main_melody([a, b]) is a

    def test_tie_broken_by_mean_pitch(self):
        a, b = self.track(50, 62), self.track(50, 70)
        assert select_main_melody([a, b]) is b

    def test_empty_errors(self):
        with pytest.raises(NotFoundError):
            select_main_melody([])


class TestLoadDataset:
    def test_midi_dir(self, tmp_path):
        (tmp_path / "a.mid").write_bytes(write_midi([[(60, 0, 480)]]))
        (tmp_path / "b.mid").write_bytes(write_midi([[(64, 0, 480), (65, 480, 960)]]))
        registry = load_dataset(tmp_path, "midi_dir")
        assert sorted(registry.ids()) == ["a", "b"]
        assert len(registry.get("b").notes) == 2

    def test_score_json_phrases_pass_through(self, tmp_path):
        song = {
            "id": "song1",
            "source": "dataset",
            "notes": [
                {"pitch": 60 + i, "start_s": i * 0.5, "end_s": i * 0.5 + 0.5} for i in range(12)
            ],
            "phrases": [
                {"first_note": 0, "last_note": 4, "source_syllable_count": 5},
                {"first_note": 5, "last_note": 11, "source_syllable_count": 7},
            ],
        }
        path = tmp_path / "data.json"
        path.write_text(json.dumps({"songs": [song]}), encoding="utf-8")
        registry = load_dataset(path, "score_json")
        assert len(registry.get("song1").phrases) == 2

    def test_invalid_entry_skipped_with_warning(self, tmp_path):
        bad = {
            "id": "zero-dur",
            "source": "dataset",
            "notes": [{"pitch": 60, "start_s": 0.5, "end_s": 0.5}],
        }
        good = {
            "id": "fine",
            "source": "dataset",
            "notes": [{"pitch": 60, "start_s": 0.0, "end_s": 0.5}],
        }
        path = tmp_path / "data.json"
        path.write_text(json.dumps({"songs": [bad, good]}), encoding="utf-8")
        registry = load_dataset(path, "score_json")
        assert registry.ids() == ["fine"]
        assert len(registry.warnings) == 1

    def test_unreadable_path(self, tmp_path):
        with pytest.raises(OSError):
            load_dataset(tmp_path / "missing.json", "score_json")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ParameterError):
            load_dataset(tmp_path, "parquet")


def annotated_melody(n_phrases=3, notes_per_phrase=4) -> Melody:
    notes = []
    phrases = []
    groups = []
    t = 0.0
    idx = 0
    for p in range(n_phrases):
        first = idx
        for _ in range(notes_per_phrase):
            notes.append(Note(60 + idx % 12, t, t + 0.5))
            t += 0.5 + (0.1 if idx % 3 == 0 else 0.0)  # some gaps to preserve
            groups.append(SourceGroup((idx,)))
            idx += 1
        phrases.append(Phrase(first, idx - 1, notes_per_phrase))
    return Melody(
        id="annotated",
        source=MelodySource.DATASET,
        notes=tuple(notes),
        phrases=tuple(phrases),
        source_groups=tuple(groups),
    )


class TestSampleWindow:
    def test_whole_melody_single_offset(self):
        m = generate_random_melody(RandomMelodyParams(n_notes=10, seed=5))
        w = sample_window(m, WindowRequest(n_notes=10), seed=0)
        assert len(w.notes) == 10
        assert w.notes[0].start_s == 0.0

    def test_all_phrases_single_choice(self):
        m = annotated_melody(n_phrases=3)
        w = sample_window(m, WindowRequest(whole_phrases=3), seed=1)
        assert len(w.phrases) == 3
        assert len(w.source_groups) == len(m.source_groups)

    def test_too_short_errors_with_counts(self):
        m = generate_random_melody(RandomMelodyParams(n_notes=4, seed=5))
        with pytest.raises(InsufficientMaterialError) as err:
            sample_window(m, WindowRequest(n_notes=6), seed=0)
        assert err.value.available == 4
        assert err.value.requested == 6

    def test_contiguous_rebased_gaps_preserved(self):
        m = annotated_melody(n_phrases=4)
        for seed in range(30):
            w = sample_window(m, WindowRequest(n_notes=5), seed=seed)
            assert w.notes[0].start_s == pytest.approx(0.0)
            # find the source offset and compare inter-note gaps
            src = m.pitches()
            win = w.pitches()
            offsets = [
                i for i in range(len(src) - len(win) + 1) if src[i : i + len(win)] == win
            ]
            assert offsets
            i = offsets[0]
            for k in range(len(win) - 1):
                src_gap = m.notes[i + k + 1].start_s - m.notes[i + k].end_s
                win_gap = w.notes[k + 1].start_s - w.notes[k].end_s
                assert win_gap == pytest.approx(src_gap)

    def test_deterministic_per_seed(self):
        m = annotated_melody(n_phrases=6)
        a = sample_window(m, WindowRequest(whole_phrases=2), seed=42)
        b = sample_window(m, WindowRequest(whole_phrases=2), seed=42)
        assert melody_to_json(a) == melody_to_json(b)

    def test_phrase_window_reindexes(self):
        m = annotated_melody(n_phrases=3, notes_per_phrase=4)
        w = sample_window(m, WindowRequest(whole_phrases=1), seed=9)
        assert w.phrases[0].first_note == 0
        assert len(w.notes) == 4
        assert validate_melody(w) == []

    def test_registry_rejects_duplicate_id_suffix(self):
        registry = MelodyRegistry()
        m = generate_random_melody(RandomMelodyParams(n_notes=3, seed=1))
        assert registry.add(m)
        assert registry.add(m)
        assert len(registry.ids()) == 2
