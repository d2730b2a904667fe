"""Syllable-to-note alignment strategies and phrase constraint extraction.

Three strategies: forced alignment onto a fresh random melody, pitch
based one-to-one mapping, and lyric-aware mapping that preserves the
source song's one-to-many (melisma) structure. Alignment never edits
notes; it only assigns them.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import (
    AlignmentOverflowError,
    InsufficientMaterialError,
    ParameterError,
    UnsupportedMelodyError,
)
from .melody import RandomMelodyParams, generate_random_melody
from .score import Melody, MusicScore, Phrase, ScoreEntry, SourceGroup


@dataclass(frozen=True)
class PhraseConstraints:
    """Syllables allowed per musical phrase, in phrase order."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 1 for c in self.counts):
            raise ParameterError(f"phrase syllable counts must be >= 1, got {self.counts}")


def align_one_to_one(syllables: list[str], melody: Melody) -> MusicScore:
    """Pitch-based alignment: syllable i sings note i.

    Surplus notes are dropped (the demo must always produce output);
    too few notes is an error carrying both counts.
    """
    if len(melody.notes) < len(syllables):
        raise InsufficientMaterialError(
            "not enough notes for one-to-one alignment", len(melody.notes), len(syllables)
        )
    entries = tuple(
        ScoreEntry(syllable=s, phonemes=(), notes=(melody.notes[i],), sustained=(False,))
        for i, s in enumerate(syllables)
    )
    return MusicScore(entries=entries)


def align_forced_random(syllables: list[str], params: RandomMelodyParams) -> MusicScore:
    """Generate a random melody sized to the syllables, then map 1:1."""
    if not syllables:
        raise ParameterError("need at least one syllable")
    sized = RandomMelodyParams(
        n_notes=len(syllables),
        pitch_low=params.pitch_low,
        pitch_high=params.pitch_high,
        dur_low_s=params.dur_low_s,
        dur_high_s=params.dur_high_s,
        seed=params.seed,
    )
    return align_one_to_one(syllables, generate_random_melody(sized))


def align_lyric_aware(syllables_per_phrase: list[list[str]], melody: Melody) -> MusicScore:
    """Preserve the source song's syllable-to-note structure per phrase.

    New syllable j takes the notes of source group j; notes after the
    first in a group are sustained continuations. When a phrase has
    fewer new syllables than groups, trailing groups are dropped; when
    it has more, surplus syllables consume the phrase's group-free notes
    one-to-one, and running out of those is an overflow error.
    """
    if melody.phrases is None or melody.source_groups is None:
        raise UnsupportedMelodyError(
            f"melody {melody.id} lacks phrase/source-group annotations for lyric-aware alignment"
        )
    entries: list[ScoreEntry] = []
    pairs = min(len(syllables_per_phrase), len(melody.phrases))
    for pi in range(pairs):
        syllables = syllables_per_phrase[pi]
        phrase = melody.phrases[pi]
        groups = _groups_in_phrase(melody.source_groups, phrase)
        grouped_last = groups[-1].note_indices[-1] if groups else phrase.first_note - 1
        spare = list(range(grouped_last + 1, phrase.last_note + 1))
        for j, syllable in enumerate(syllables):
            if j < len(groups):
                idx = groups[j].note_indices
            elif spare:
                idx = (spare.pop(0),)
            else:
                raise AlignmentOverflowError(
                    f"{len(syllables)} syllables but no notes left", pi
                )
            notes = tuple(melody.notes[i] for i in idx)
            entries.append(
                ScoreEntry(
                    syllable=syllable,
                    phonemes=(),
                    notes=notes,
                    sustained=(False,) + (True,) * (len(notes) - 1),
                )
            )
    return MusicScore(entries=tuple(entries))


def _groups_in_phrase(groups: tuple[SourceGroup, ...], phrase: Phrase) -> list[SourceGroup]:
    return [
        g
        for g in groups
        if g.note_indices[0] >= phrase.first_note and g.note_indices[-1] <= phrase.last_note
    ]


def extract_phrase_constraints(melody: Melody, strategy: str) -> PhraseConstraints:
    """Per-phrase syllable budgets for the constrained LLM prompt.

    pitch_based counts notes per phrase (one syllable each); lyric_aware
    counts source groups (one syllable may span several notes).
    """
    if melody.phrases is None:
        raise UnsupportedMelodyError(f"melody {melody.id} carries no phrase annotations")
    if strategy == "pitch_based":
        counts = tuple(p.last_note - p.first_note + 1 for p in melody.phrases)
    elif strategy == "lyric_aware":
        if melody.source_groups is None:
            raise UnsupportedMelodyError(f"melody {melody.id} carries no source groups")
        counts = tuple(len(_groups_in_phrase(melody.source_groups, p)) for p in melody.phrases)
        if any(c == 0 for c in counts):
            raise UnsupportedMelodyError(
                f"melody {melody.id} has a phrase with no source groups"
            )
    else:
        raise ParameterError(f"unknown constraint strategy '{strategy}'")
    return PhraseConstraints(counts=counts)
