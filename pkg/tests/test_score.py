from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from croon.errors import RangeError
from croon.score import (
    Language,
    Melody,
    MelodySource,
    MusicScore,
    Note,
    Phrase,
    ScoreEntry,
    SourceGroup,
    melody_from_dict,
    melody_to_dict,
    midi_pitch_to_hz,
    score_from_dict,
    score_to_dict,
    transpose,
    validate_melody,
)


def make_melody(pitch_times, **kwargs) -> Melody:
    notes = tuple(Note(p, s, e) for p, s, e in pitch_times)
    return Melody(id="m", source=MelodySource.DATASET, notes=notes, **kwargs)


class TestValidateMelody:
    def test_well_formed(self):
        assert validate_melody(make_melody([(60, 0.0, 0.5), (62, 0.5, 1.0)])) == []

    def test_zero_duration(self):
        violations = validate_melody(make_melody([(60, 0.5, 0.5)]))
        assert len(violations) == 1
        assert violations[0].index == 0
        assert violations[0].rule == "zero_duration"

    def test_overlap(self):
        violations = validate_melody(make_melody([(60, 0.0, 0.6), (62, 0.5, 1.0)]))
        assert [(v.index, v.rule) for v in violations] == [(0, "overlap")]

    def test_pitch_out_of_range(self):
        violations = validate_melody(make_melody([(128, 0.0, 0.5)]))
        assert violations[0].rule == "pitch_range"

    def test_unsorted(self):
        violations = validate_melody(make_melody([(60, 1.0, 1.5), (62, 0.0, 0.5)]))
        assert any(v.rule == "unsorted" for v in violations)

    def test_phrase_partition(self):
        m = make_melody(
            [(60, 0.0, 0.5), (62, 0.5, 1.0), (64, 1.0, 1.5)],
            phrases=(Phrase(0, 1), Phrase(2, 2)),
        )
        assert validate_melody(m) == []

    def test_phrase_gap_detected(self):
        m = make_melody(
            [(60, 0.0, 0.5), (62, 0.5, 1.0), (64, 1.0, 1.5)],
            phrases=(Phrase(0, 0), Phrase(2, 2)),
        )
        assert any(v.rule == "phrase_gap" for v in validate_melody(m))

    def test_groups_cover_prefix(self):
        m = make_melody(
            [(60, 0.0, 0.5), (62, 0.5, 1.0), (64, 1.0, 1.5)],
            source_groups=(SourceGroup((0,)), SourceGroup((1, 2))),
        )
        assert validate_melody(m) == []

    def test_group_gap_detected(self):
        m = make_melody(
            [(60, 0.0, 0.5), (62, 0.5, 1.0), (64, 1.0, 1.5)],
            source_groups=(SourceGroup((0,)), SourceGroup((2,))),
        )
        assert any(v.rule == "group_prefix" for v in validate_melody(m))

    def test_single_mutation_yields_single_violation(self):
        rng = random.Random(11)
        for _ in range(200):
            n = rng.randint(1, 12)
            notes = []
            t = 0.0
            for _ in range(n):
                dur = rng.uniform(0.1, 0.9)
                notes.append((rng.randint(0, 127), t, t + dur))
                t += dur + rng.uniform(0.0, 0.2)
            assert validate_melody(make_melody(notes)) == []
            # break exactly one invariant: zero out one duration
            k = rng.randrange(n)
            broken = list(notes)
            broken[k] = (broken[k][0], broken[k][1], broken[k][1])
            violations = validate_melody(make_melody(broken))
            assert [v.rule for v in violations].count("zero_duration") == 1


class TestTranspose:
    def test_identity(self):
        m = make_melody([(60, 0, 1), (64, 1, 2), (67, 2, 3)])
        assert transpose(m, 0).pitches() == [60, 64, 67]

    def test_octave_up(self):
        m = make_melody([(60, 0, 1), (64, 1, 2), (67, 2, 3)])
        assert transpose(m, 12).pitches() == [72, 76, 79]

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            transpose(make_melody([(120, 0, 1)]), 12)

    @given(
        st.lists(st.integers(30, 90), min_size=1, max_size=20),
        st.integers(-24, 24),
    )
    def test_round_trip_exact(self, pitches, delta):
        notes = [(p, float(i), float(i) + 0.5) for i, p in enumerate(pitches)]
        m = make_melody(notes)
        assert transpose(transpose(m, delta), -delta) == m


class TestPitchToHz:
    def test_reference(self):
        assert midi_pitch_to_hz(69) == 440.0

    def test_octave_above(self):
        assert midi_pitch_to_hz(81) == pytest.approx(880.0, abs=1e-9)

    def test_middle_c(self):
        # direct evaluation of 440 * 2**(-9/12)
        assert midi_pitch_to_hz(60) == pytest.approx(261.6256, abs=1e-3)

    def test_out_of_range(self):
        with pytest.raises(RangeError):
            midi_pitch_to_hz(128)
        with pytest.raises(RangeError):
            midi_pitch_to_hz(-1)

    def test_octave_doubles_everywhere(self):
        for p in range(0, 116):
            assert midi_pitch_to_hz(p + 12) == pytest.approx(
                2.0 * midi_pitch_to_hz(p), rel=1e-9
            )


class TestSerialization:
    def test_melody_round_trip(self):
        m = make_melody(
            [(60, 0.0, 0.5), (62, 0.5, 1.0), (64, 1.0, 1.75)],
            phrases=(Phrase(0, 1, 2), Phrase(2, 2, 1)),
            source_groups=(SourceGroup((0,)), SourceGroup((1, 2))),
            language_hint=Language.ZH,
        )
        assert melody_from_dict(melody_to_dict(m)) == m

    def test_score_round_trip(self):
        score = MusicScore(
            entries=(
                ScoreEntry("你", ("n", "i3"), (Note(60, 0.0, 0.5),), (False,)),
                ScoreEntry("好", ("h", "ao3"), (Note(62, 0.5, 1.0), Note(64, 1.0, 1.5)), (False, True)),
            )
        )
        assert score_from_dict(score_to_dict(score)) == score
