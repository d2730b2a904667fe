"""Speech-in, singing-out dialogue toolkit.

A cascaded pipeline: transcribe user speech, generate a persona- and
phrase-constrained lyrical reply, align its syllables to a melody, and
synthesize sung audio. Deterministic built-in backends make every stage
testable offline; HTTP adapters plug in real models.
"""

__version__ = "0.1.0"

from .score import (  # noqa: F401
    Language,
    Melody,
    MelodySource,
    MusicScore,
    Note,
    Phrase,
    ScoreEntry,
    SourceGroup,
    midi_pitch_to_hz,
    transpose,
    validate_melody,
)
