"""Lyric normalization, syllable counting, and grapheme-to-phoneme adapters.

Chinese counts Han characters as syllables; Japanese counts morae over
kana. Kanji in Japanese input needs a pluggable kana-conversion backend
(no reading dictionary ships with the package). The default G2P emits
one token per syllable equal to the syllable text, so the pipeline runs
without external lexicons.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol

from .errors import BackendError, EmptyLyricsError, ParameterError, UnsupportedInputError
from .score import Language

# CJK Unified Ideographs plus extension A and compatibility block.
_HAN_RANGES = (
    (0x4E00, 0x9FFF),
    (0x3400, 0x4DBF),
    (0xF900, 0xFAFF),
    (0x20000, 0x2A6DF),
)

_HIRAGANA = (0x3041, 0x3096)
_KATAKANA = (0x30A1, 0x30FA)
_LONG_VOWEL_MARK = "ー"
_SMALL_YAYUYO = set("ゃゅょャュョ")

# Sentence-final and clause punctuation the normalizer splits on.
_SPLIT_PATTERN = re.compile(r"[\n。！？，、.!?,]+")
_PARENTHETICAL = re.compile(r"（[^）]*）|\([^)]*\)|【[^】]*】|\*[^*\n]*\*|＊[^＊\n]*＊")
_ASTERISKS = re.compile(r"[*＊]")


def is_han(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _HAN_RANGES)


def is_kana(ch: str) -> bool:
    cp = ord(ch)
    return _HIRAGANA[0] <= cp <= _HIRAGANA[1] or _KATAKANA[0] <= cp <= _KATAKANA[1] or ch == _LONG_VOWEL_MARK


def _is_singable(ch: str) -> bool:
    return is_han(ch) or is_kana(ch) or ch.isalnum()


@dataclass(frozen=True)
class LyricLine:
    raw: str
    syllables: tuple[str, ...]


@dataclass(frozen=True)
class LyricLines:
    lines: tuple[LyricLine, ...]

    def syllable_counts(self) -> list[int]:
        return [len(line.syllables) for line in self.lines]

    def total_syllables(self) -> int:
        return sum(self.syllable_counts())

    def flat_syllables(self) -> list[str]:
        return [s for line in self.lines for s in line.syllables]

    def joined(self) -> str:
        return "\n".join(line.raw for line in self.lines)


@dataclass(frozen=True)
class PhonemizedLyrics:
    """Per-syllable phoneme token lists, parallel to a LyricLines."""

    lines: tuple[tuple[tuple[str, ...], ...], ...]

    def flat(self) -> list[tuple[str, ...]]:
        return [syl for line in self.lines for syl in line]

    def flat_tokens(self) -> list[str]:
        return [tok for line in self.lines for syl in line for tok in syl]


class KanaBackend(Protocol):
    """Converts Japanese text containing kanji into kana."""

    def to_kana(self, text: str) -> str: ...


class G2PBackend(Protocol):
    """Maps syllable tokens to phoneme tokens, one list per syllable."""

    name: str

    def phonemize(self, syllables: list[str], language: Language) -> list[list[str]]: ...


class FallbackG2P:
    """Identity G2P: one token per syllable, the syllable text itself.

    Keeps the pipeline runnable without lexicons; phoneme error rate
    degenerates to character error rate under this backend.
    """

    name = "fallback"

    def phonemize(self, syllables: list[str], language: Language) -> list[list[str]]:
        return [[s] for s in syllables]


def split_morae(text: str, kana: KanaBackend | None = None) -> list[str]:
    """Split kana text into morae.

    Small ゃゅょ (and katakana equivalents) merge with the preceding
    kana; っ/ッ, ん/ン, and ー each count as one mora. Kanji requires a
    kana backend. Non-kana symbols are ignored.
    """
    if any(is_han(ch) for ch in text):
        if kana is None:
            raise UnsupportedInputError(
                "Japanese line contains kanji and no kana-conversion backend is configured"
            )
        text = kana.to_kana(text)
        if any(is_han(ch) for ch in text):
            raise BackendError("kana backend left kanji in its output", text)
    morae: list[str] = []
    for ch in text:
        if not is_kana(ch):
            continue
        if ch in _SMALL_YAYUYO and morae:
            morae[-1] += ch
        else:
            morae.append(ch)
    return morae


def syllabify(line: str, language: Language, kana: KanaBackend | None = None) -> list[str]:
    if language == Language.ZH:
        return [ch for ch in line if is_han(ch)]
    return split_morae(line, kana)


def count_syllables(line: str, language: Language, kana: KanaBackend | None = None) -> int:
    return len(syllabify(line, language, kana))


def normalize_lyrics(
    text: str, language: Language, kana: KanaBackend | None = None
) -> LyricLines:
    """Normalize raw reply text into singable lines.

    Splits on newlines and sentence punctuation, strips parentheticals
    and asterisk annotations (persona prompts forbid them but models may
    still emit them), then drops anything left unsingable.
    """
    if not text or not text.strip():
        raise ParameterError("text must be non-empty")
    cleaned = _PARENTHETICAL.sub("", text)
    cleaned = _ASTERISKS.sub("", cleaned)
    lines: list[LyricLine] = []
    for piece in _SPLIT_PATTERN.split(cleaned):
        raw = "".join(ch for ch in piece if _is_singable(ch))
        if not raw:
            continue
        syllables = tuple(syllabify(raw, language, kana))
        lines.append(LyricLine(raw=raw, syllables=syllables))
    if not lines:
        raise EmptyLyricsError(f"no singable lines after normalizing {text!r}")
    return LyricLines(lines=tuple(lines))


def g2p(lines: LyricLines, language: Language, backend: G2PBackend) -> PhonemizedLyrics:
    """Phonemize normalized lyrics; syllable count is preserved exactly.

    The per-line structure mirrors the input; a backend that changes the
    syllable count or emits an empty token list is a contract violation.
    """
    if not lines.lines:
        raise ParameterError("lines must be normalized and non-empty")
    out: list[tuple[tuple[str, ...], ...]] = []
    for line in lines.lines:
        syllables = list(line.syllables)
        try:
            tokens = backend.phonemize(syllables, language)
        except BackendError:
            raise
        except Exception as exc:
            raise BackendError(f"G2P backend '{backend.name}' failed", str(exc)) from exc
        if len(tokens) != len(syllables):
            raise BackendError(
                f"G2P backend '{backend.name}' broke the syllable contract",
                f"{len(syllables)} syllables in, {len(tokens)} token lists out",
            )
        if any(not t for t in tokens):
            raise BackendError(
                f"G2P backend '{backend.name}' returned an empty phoneme list",
                f"line {line.raw!r}",
            )
        out.append(tuple(tuple(t) for t in tokens))
    return PhonemizedLyrics(lines=tuple(out))
