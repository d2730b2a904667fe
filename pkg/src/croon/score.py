"""Canonical data model: notes, melodies, phrases, and aligned music scores.

All types are frozen dataclasses; instances are safe to share across
concurrent tasks. Times are seconds (float64), pitches are MIDI note
numbers. Rests are implicit gaps between consecutive notes; polyphony is
rejected at ingestion (the pipeline sings a single voice).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from .errors import RangeError

PITCH_MIN = 0
PITCH_MAX = 127
REFERENCE_PITCH = 69  # A4
REFERENCE_HZ = 440.0


class Language(str, enum.Enum):
    """Languages the pipeline entry points accept."""

    ZH = "zh"
    JA = "ja"


class MelodySource(str, enum.Enum):
    RANDOM = "random"
    DATASET = "dataset"


@dataclass(frozen=True)
class Note:
    """A pitched, timed event: MIDI pitch plus start/end in seconds."""

    pitch: int
    start_s: float
    end_s: float

    def duration_s(self) -> float:
        return self.end_s - self.start_s

    def shifted(self, delta_s: float) -> "Note":
        return Note(self.pitch, self.start_s + delta_s, self.end_s + delta_s)


@dataclass(frozen=True)
class Phrase:
    """Inclusive range of note indices forming one musical phrase."""

    first_note: int
    last_note: int
    source_syllable_count: int | None = None


@dataclass(frozen=True)
class SourceGroup:
    """Notes one source syllable spanned in the original song.

    Groups are contiguous, disjoint, ordered, and cover a prefix of the
    note list; a multi-note group marks a sustained (melisma) syllable.
    """

    note_indices: tuple[int, ...]


@dataclass(frozen=True)
class Melody:
    """An ordered, non-overlapping monophonic note line with optional
    phrase and source-syllable annotations."""

    id: str
    source: MelodySource
    notes: tuple[Note, ...]
    phrases: tuple[Phrase, ...] | None = None
    source_groups: tuple[SourceGroup, ...] | None = None
    language_hint: Language | None = None

    def pitches(self) -> list[int]:
        return [n.pitch for n in self.notes]

    def end_s(self) -> float:
        return self.notes[-1].end_s if self.notes else 0.0


@dataclass(frozen=True)
class ScoreEntry:
    """One syllable aligned to one or more notes.

    ``sustained[k]`` marks note ``k`` as a continuation of the syllable's
    onset note; the first flag is always False.
    """

    syllable: str
    phonemes: tuple[str, ...]
    notes: tuple[Note, ...]
    sustained: tuple[bool, ...]


@dataclass(frozen=True)
class MusicScore:
    """The synthesizer input: ordered syllable-to-note alignment."""

    entries: tuple[ScoreEntry, ...]

    def all_notes(self) -> list[Note]:
        return [n for e in self.entries for n in e.notes]

    def end_s(self) -> float:
        notes = self.all_notes()
        return notes[-1].end_s if notes else 0.0


@dataclass(frozen=True)
class Violation:
    """One broken melody invariant: which index, which rule."""

    index: int
    rule: str
    detail: str

    def __str__(self) -> str:
        return f"[{self.rule} at {self.index}] {self.detail}"


def validate_melody(melody: Melody) -> list[Violation]:
    """Check every Melody invariant; violations are data, not failures.

    Returns an empty list iff the melody is well formed.
    """
    violations: list[Violation] = []
    notes = melody.notes
    for i, note in enumerate(notes):
        if not (PITCH_MIN <= note.pitch <= PITCH_MAX):
            violations.append(Violation(i, "pitch_range", f"pitch {note.pitch} outside 0..127"))
        if note.start_s < 0:
            violations.append(Violation(i, "negative_start", f"start {note.start_s} < 0"))
        if not (note.start_s < note.end_s):
            violations.append(
                Violation(i, "zero_duration", f"start {note.start_s} !< end {note.end_s}")
            )
    for i in range(len(notes) - 1):
        if notes[i].start_s > notes[i + 1].start_s:
            violations.append(Violation(i, "unsorted", "notes not sorted by start time"))
        elif notes[i].end_s > notes[i + 1].start_s:
            violations.append(
                Violation(
                    i,
                    "overlap",
                    f"note {i} ends at {notes[i].end_s} after note {i + 1} "
                    f"starts at {notes[i + 1].start_s}",
                )
            )

    if melody.phrases is not None:
        expected_start = 0
        for pi, phrase in enumerate(melody.phrases):
            if phrase.first_note > phrase.last_note:
                violations.append(
                    Violation(pi, "phrase_order", f"first {phrase.first_note} > last {phrase.last_note}")
                )
                continue
            if phrase.first_note != expected_start:
                violations.append(
                    Violation(
                        pi,
                        "phrase_gap",
                        f"phrase starts at {phrase.first_note}, expected {expected_start}",
                    )
                )
            if phrase.last_note >= len(notes):
                violations.append(
                    Violation(pi, "phrase_range", f"last note {phrase.last_note} beyond melody")
                )
            if phrase.source_syllable_count is not None and phrase.source_syllable_count < 1:
                violations.append(
                    Violation(pi, "phrase_syllables", "source_syllable_count must be >= 1")
                )
            expected_start = phrase.last_note + 1

    if melody.source_groups is not None:
        expected_next = 0
        for gi, group in enumerate(melody.source_groups):
            idx = group.note_indices
            if len(idx) < 1:
                violations.append(Violation(gi, "group_empty", "source group has no notes"))
                continue
            if list(idx) != list(range(idx[0], idx[-1] + 1)):
                violations.append(Violation(gi, "group_contiguous", f"indices {idx} not contiguous"))
            if idx[0] != expected_next:
                violations.append(
                    Violation(gi, "group_prefix", f"group starts at {idx[0]}, expected {expected_next}")
                )
            if idx[-1] >= len(notes):
                violations.append(Violation(gi, "group_range", f"index {idx[-1]} beyond melody"))
            expected_next = idx[-1] + 1

    return violations


def transpose(melody: Melody, delta: int) -> Melody:
    """Shift every pitch by ``delta`` semitones; timing untouched."""
    for i, note in enumerate(melody.notes):
        shifted = note.pitch + delta
        if not (PITCH_MIN <= shifted <= PITCH_MAX):
            raise RangeError(f"transpose by {delta} pushes note {i} to pitch {shifted}")
    return Melody(
        id=melody.id,
        source=melody.source,
        notes=tuple(Note(n.pitch + delta, n.start_s, n.end_s) for n in melody.notes),
        phrases=melody.phrases,
        source_groups=melody.source_groups,
        language_hint=melody.language_hint,
    )


def midi_pitch_to_hz(pitch: int) -> float:
    """Equal-temperament frequency: 440 * 2**((p - 69) / 12)."""
    if not (PITCH_MIN <= pitch <= PITCH_MAX):
        raise RangeError(f"MIDI pitch {pitch} outside 0..127")
    return REFERENCE_HZ * 2.0 ** ((pitch - REFERENCE_PITCH) / 12.0)


# ---------------------------------------------------------------------------
# Canonical JSON forms (documented in docs/formats.md)
# ---------------------------------------------------------------------------


def note_to_dict(note: Note) -> dict[str, Any]:
    return {"pitch": note.pitch, "start_s": note.start_s, "end_s": note.end_s}


def note_from_dict(d: dict[str, Any]) -> Note:
    return Note(int(d["pitch"]), float(d["start_s"]), float(d["end_s"]))


def melody_to_dict(melody: Melody) -> dict[str, Any]:
    out: dict[str, Any] = {
        "id": melody.id,
        "source": melody.source.value,
        "notes": [note_to_dict(n) for n in melody.notes],
    }
    if melody.phrases is not None:
        out["phrases"] = [
            {
                "first_note": p.first_note,
                "last_note": p.last_note,
                "source_syllable_count": p.source_syllable_count,
            }
            for p in melody.phrases
        ]
    if melody.source_groups is not None:
        out["source_groups"] = [{"note_indices": list(g.note_indices)} for g in melody.source_groups]
    if melody.language_hint is not None:
        out["language_hint"] = melody.language_hint.value
    return out


def melody_from_dict(d: dict[str, Any]) -> Melody:
    phrases = None
    if d.get("phrases") is not None:
        phrases = tuple(
            Phrase(int(p["first_note"]), int(p["last_note"]), p.get("source_syllable_count"))
            for p in d["phrases"]
        )
    groups = None
    if d.get("source_groups") is not None:
        groups = tuple(SourceGroup(tuple(int(i) for i in g["note_indices"])) for g in d["source_groups"])
    hint = d.get("language_hint")
    return Melody(
        id=str(d["id"]),
        source=MelodySource(d.get("source", "dataset")),
        notes=tuple(note_from_dict(n) for n in d["notes"]),
        phrases=phrases,
        source_groups=groups,
        language_hint=Language(hint) if hint else None,
    )


def score_to_dict(score: MusicScore) -> dict[str, Any]:
    return {
        "entries": [
            {
                "syllable": e.syllable,
                "phonemes": list(e.phonemes),
                "notes": [note_to_dict(n) for n in e.notes],
                "sustained": list(e.sustained),
            }
            for e in score.entries
        ]
    }


def score_from_dict(d: dict[str, Any]) -> MusicScore:
    return MusicScore(
        entries=tuple(
            ScoreEntry(
                syllable=str(e["syllable"]),
                phonemes=tuple(str(p) for p in e["phonemes"]),
                notes=tuple(note_from_dict(n) for n in e["notes"]),
                sustained=tuple(bool(s) for s in e["sustained"]),
            )
            for e in d["entries"]
        )
    )


def melody_to_json(melody: Melody) -> str:
    return json.dumps(melody_to_dict(melody), ensure_ascii=False, sort_keys=True)


def score_to_json(score: MusicScore) -> str:
    return json.dumps(score_to_dict(score), ensure_ascii=False, sort_keys=True)
