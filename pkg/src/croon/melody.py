"""Melody sources: seeded random synthesis, MIDI files, and dataset archives.

Every Melody leaving this module passes validate_melody. Loaders are
registered by source name; the registry is immutable once loaded.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import InsufficientMaterialError, NotFoundError, ParameterError
from .midi import parse_midi
from .score import (
    Language,
    Melody,
    MelodySource,
    Note,
    Phrase,
    SourceGroup,
    melody_from_dict,
    validate_melody,
)

logger = logging.getLogger(__name__)

# One octave around middle C keeps stub vocals in a plausible register;
# durations bracket typical sung syllable lengths.
DEFAULT_PITCH_LOW = 60
DEFAULT_PITCH_HIGH = 72
DEFAULT_DUR_LOW_S = 0.2
DEFAULT_DUR_HIGH_S = 0.8


@dataclass(frozen=True)
class RandomMelodyParams:
    n_notes: int
    pitch_low: int = DEFAULT_PITCH_LOW
    pitch_high: int = DEFAULT_PITCH_HIGH
    dur_low_s: float = DEFAULT_DUR_LOW_S
    dur_high_s: float = DEFAULT_DUR_HIGH_S
    seed: int = 0

    def validate(self) -> None:
        if self.n_notes < 1:
            raise ParameterError(f"n_notes must be >= 1, got {self.n_notes}")
        if not (0 <= self.pitch_low <= self.pitch_high <= 127):
            raise ParameterError(
                f"need 0 <= pitch_low <= pitch_high <= 127, got [{self.pitch_low}, {self.pitch_high}]"
            )
        if not (0 < self.dur_low_s <= self.dur_high_s):
            raise ParameterError(
                f"need 0 < dur_low_s <= dur_high_s, got [{self.dur_low_s}, {self.dur_high_s}]"
            )


def generate_random_melody(params: RandomMelodyParams) -> Melody:
    """Uniform iid pitches and durations, contiguous from t=0.

    No rests, no phrases, no source groups; deterministic per seed.
    """
    params.validate()
    rng = random.Random(params.seed)
    notes = []
    t = 0.0
    for _ in range(params.n_notes):
        pitch = rng.randint(params.pitch_low, params.pitch_high)
        dur = rng.uniform(params.dur_low_s, params.dur_high_s)
        notes.append(Note(pitch, t, t + dur))
        t += dur
    return Melody(id=f"random-{params.seed}", source=MelodySource.RANDOM, notes=tuple(notes))


def select_main_melody(melodies: list[Melody]) -> Melody:
    """Pick the most melody-like track: most notes, then highest mean pitch."""
    if not melodies:
        raise NotFoundError("no melodies to select from")
    return max(melodies, key=lambda m: (len(m.notes), sum(m.pitches()) / len(m.notes)))


@dataclass(frozen=True)
class WindowRequest:
    """Either a contiguous note run or whole annotated phrases."""

    n_notes: int | None = None
    whole_phrases: int | None = None

    def __post_init__(self):
        if (self.n_notes is None) == (self.whole_phrases is None):
            raise ParameterError("request exactly one of n_notes or whole_phrases")
        if self.n_notes is not None and self.n_notes < 1:
            raise ParameterError(f"n_notes must be >= 1, got {self.n_notes}")
        if self.whole_phrases is not None and self.whole_phrases < 1:
            raise ParameterError(f"whole_phrases must be >= 1, got {self.whole_phrases}")


def sample_window(melody: Melody, need: WindowRequest, seed: int) -> Melody:
    """Cut a window out of a melody, times rebased to start at 0.

    n_notes picks a contiguous run uniformly among valid offsets;
    whole_phrases picks consecutive phrases keeping their annotations and
    any source groups that fall entirely inside the window.
    """
    rng = random.Random(seed)
    if need.n_notes is not None:
        k = need.n_notes
        if len(melody.notes) < k:
            raise InsufficientMaterialError(
                f"melody {melody.id} too short for window", len(melody.notes), k
            )
        offset = rng.randint(0, len(melody.notes) - k)
        return _cut(melody, offset, offset + k - 1, suffix=f"n{offset}")

    j = need.whole_phrases
    phrases = melody.phrases or ()
    if len(phrases) < j:
        raise InsufficientMaterialError(
            f"melody {melody.id} has too few phrases", len(phrases), j
        )
    start = rng.randint(0, len(phrases) - j)
    chosen = phrases[start : start + j]
    return _cut(melody, chosen[0].first_note, chosen[-1].last_note, suffix=f"p{start}", phrases=chosen)


def _cut(
    melody: Melody,
    first: int,
    last: int,
    suffix: str,
    phrases: tuple[Phrase, ...] | None = None,
) -> Melody:
    base = melody.notes[first].start_s
    notes = tuple(n.shifted(-base) for n in melody.notes[first : last + 1])
    new_phrases = None
    if phrases is not None:
        new_phrases = tuple(
            Phrase(p.first_note - first, p.last_note - first, p.source_syllable_count)
            for p in phrases
        )
    new_groups = None
    if melody.source_groups is not None:
        kept = [
            g
            for g in melody.source_groups
            if g.note_indices[0] >= first and g.note_indices[-1] <= last
        ]
        if kept:
            new_groups = tuple(SourceGroup(tuple(i - first for i in g.note_indices)) for g in kept)
    return Melody(
        id=f"{melody.id}[{suffix}]",
        source=melody.source,
        notes=notes,
        phrases=new_phrases,
        source_groups=new_groups,
        language_hint=melody.language_hint,
    )


@dataclass
class MelodyRegistry:
    """Validated melodies keyed by unique id."""

    entries: dict[str, Melody] = field(default_factory=dict)
    sources: dict[str, str] = field(default_factory=dict)  # source name -> origin path
    warnings: list[str] = field(default_factory=list)

    def add(self, melody: Melody) -> bool:
        bad = validate_melody(melody)
        if bad:
            self.warnings.append(f"skipped {melody.id}: {bad[0]}")
            logger.warning("skipping invalid melody %s: %s", melody.id, bad[0])
            return False
        key = melody.id
        n = 1
        while key in self.entries:
            n += 1
            key = f"{melody.id}#{n}"
        if key != melody.id:
            melody = Melody(
                id=key,
                source=melody.source,
                notes=melody.notes,
                phrases=melody.phrases,
                source_groups=melody.source_groups,
                language_hint=melody.language_hint,
            )
        self.entries[key] = melody
        return True

    def get(self, melody_id: str) -> Melody:
        try:
            return self.entries[melody_id]
        except KeyError:
            raise NotFoundError(f"unknown melody id '{melody_id}'") from None

    def ids(self) -> list[str]:
        return list(self.entries)


def load_dataset(path: str | Path, format: str) -> MelodyRegistry:
    """Load a melody archive: 'score_json' or 'midi_dir'.

    Entries failing validation are skipped with a warning, never fatal.
    """
    path = Path(path)
    registry = MelodyRegistry()
    if format == "score_json":
        _load_score_json(path, registry)
    elif format == "midi_dir":
        _load_midi_dir(path, registry)
    else:
        raise ParameterError(f"unknown dataset format '{format}'")
    registry.sources[format] = str(path)
    return registry


def _load_score_json(path: Path, registry: MelodyRegistry) -> None:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise OSError(f"cannot read dataset {path}: {exc}") from exc
    for song in payload.get("songs", []):
        try:
            melody = melody_from_dict(song)
        except (KeyError, ValueError, TypeError) as exc:
            registry.warnings.append(f"skipped malformed song entry: {exc}")
            continue
        registry.add(melody)


def _load_midi_dir(path: Path, registry: MelodyRegistry) -> None:
    if not path.is_dir():
        raise OSError(f"not a directory: {path}")
    for midi_path in sorted(path.glob("*.mid")) + sorted(path.glob("*.midi")):
        try:
            melodies = parse_midi(midi_path.read_bytes())
        except Exception as exc:
            registry.warnings.append(f"skipped {midi_path.name}: {exc}")
            continue
        if not melodies:
            registry.warnings.append(f"skipped {midi_path.name}: no note events")
            continue
        main = select_main_melody(melodies)
        registry.add(
            Melody(
                id=midi_path.stem,
                source=MelodySource.DATASET,
                notes=main.notes,
            )
        )
