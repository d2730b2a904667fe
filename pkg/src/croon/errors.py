"""Exception hierarchy shared across the package.

Every error a caller can act on gets its own class; message text is for
humans, the class is the contract.
"""

from __future__ import annotations


class CroonError(Exception):
    """Base class for all package errors."""

    code = "error"


class ParameterError(CroonError, ValueError):
    """Invalid argument or violated precondition."""

    code = "parameter"


class RangeError(CroonError, ValueError):
    """Value outside its legal range (e.g. MIDI pitch not in 0..127)."""

    code = "range"


class ParseError(CroonError):
    """Malformed input bytes; carries the byte offset of the failure."""

    code = "parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnsupportedFormatError(CroonError):
    """Recognized container but unsupported variant (e.g. SMF format 2)."""

    code = "unsupported_format"


class NotFoundError(CroonError, KeyError):
    """Lookup by id failed, or a selection had nothing to choose from."""

    code = "not_found"

    def __str__(self) -> str:  # KeyError quotes its message; undo that
        return Exception.__str__(self)


class ConflictError(CroonError):
    """Registration collides with an existing entry."""

    code = "conflict"


class ConfigError(CroonError):
    """Configuration is missing a field or violates an invariant."""

    code = "config"


class InsufficientMaterialError(CroonError):
    """Melody has fewer notes/phrases than requested."""

    code = "insufficient_material"

    def __init__(self, message: str, available: int, requested: int):
        super().__init__(f"{message}: available {available}, requested {requested}")
        self.available = available
        self.requested = requested


class UnsupportedMelodyError(CroonError):
    """Melody lacks the annotations the operation needs."""

    code = "unsupported_melody"


class AlignmentOverflowError(CroonError):
    """A phrase ran out of notes for its surplus syllables."""

    code = "alignment_overflow"

    def __init__(self, message: str, phrase_index: int):
        super().__init__(f"{message} (phrase {phrase_index})")
        self.phrase_index = phrase_index


class EmptyLyricsError(CroonError):
    """Text normalized down to zero singable lines."""

    code = "empty_lyrics"


class UnsupportedInputError(CroonError):
    """Input needs a backend that is not configured (e.g. kanji reading)."""

    code = "unsupported_input"


class BackendError(CroonError):
    """A backend call failed; carries the backend's diagnostic."""

    code = "backend"

    def __init__(self, message: str, diagnostic: str = ""):
        super().__init__(f"{message}: {diagnostic}" if diagnostic else message)
        self.diagnostic = diagnostic


class BackendUnavailableError(BackendError):
    """Backend unreachable after the configured retries."""

    code = "backend_unavailable"


class FeatureDisabledError(CroonError):
    """Optional feature invoked without a configured backend."""

    code = "feature_disabled"


class PipelineStageError(CroonError):
    """A pipeline stage failed; identifies the stage and wraps the cause."""

    code = "pipeline_stage"

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
