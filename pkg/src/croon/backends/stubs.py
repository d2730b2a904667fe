"""Deterministic built-in backends: every stage runs without ML weights.

StubAsr looks transcripts up by audio content digest, StubLlm emits
syllable-exact replies parsed from the constraint block, and SineSvs
renders the score as faded sine tones. All three are pure functions of
their inputs, which is what makes end-to-end turns byte-reproducible.
"""

from __future__ import annotations

import hashlib
import math
import re

import numpy as np

from ..audio import SYNTHESIS_RATE, AudioBuffer
from ..lyrics import split_morae
from ..prompting import (
    JA_CONSTRAINT_LINE,
    ZH_CONSTRAINT_LINE,
    VoiceSpec,
)
from ..score import Language, MusicScore, midi_pitch_to_hz

DEFAULT_TRANSCRIPT = "你好"

FADE_S = 0.010
AMPLITUDE = 0.5  # of full scale

# Reply banks the stub LLM slices syllable-exact lines from.
ZH_BANK = "歌声随风起月光落心间山水共长天梦里花正开云影过平原星辰照归路"
JA_BANK = "さくらのうたをかぜにのせてとどけようこころのおくへひびくこえ"

_ZH_LINE_RE = re.compile(ZH_CONSTRAINT_LINE.format(n=r"(\d+)", k=r"(\d+)"))
_JA_LINE_RE = re.compile(JA_CONSTRAINT_LINE.format(n=r"(\d+)", k=r"(\d+)"))

CANNED_REPLIES = {
    "丽梅": "丽梅在此，愿以歌声回应你",
    "遥音": "遥音听见你的话哩，这就唱给你听",
}
DEFAULT_CANNED_REPLY = "我听见你的话了，让我为你唱一段"
JA_CANNED_REPLY = "きみのこえがきこえたよ、うたでこたえよう"


class StubAsr:
    """Transcript lookup by audio fingerprint; unknown audio gets the
    configured default text."""

    def __init__(self, mapping: dict[str, str] | None = None, default: str = DEFAULT_TRANSCRIPT):
        self.mapping = dict(mapping or {})
        self.default = default

    def remember(self, audio: AudioBuffer, text: str) -> None:
        self.mapping[audio.fingerprint()] = text

    def transcribe(self, audio: AudioBuffer, language: Language) -> str:
        return self.mapping.get(audio.fingerprint(), self.default)


def _stable_offset(seed_text: str, modulus: int) -> int:
    digest = hashlib.sha256(seed_text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % modulus


class StubLlm:
    """Deterministic canned replies honoring the phrase constraint block.

    The constraint block is parsed back out of the system prompt (the
    same template the prompt builder emits); each requested line is
    sliced syllable-exact from a language-specific bank.
    """

    def complete(self, system: str, messages: list[dict[str, str]]) -> str:
        user = messages[-1]["content"] if messages else ""
        zh_counts = [int(k) for _, k in _ZH_LINE_RE.findall(system)]
        ja_counts = [int(k) for _, k in _JA_LINE_RE.findall(system)]
        if zh_counts:
            return self._constrained(zh_counts, user, ZH_BANK, per_char=True)
        if ja_counts:
            return self._constrained(ja_counts, user, JA_BANK, per_char=False)
        for name, reply in CANNED_REPLIES.items():
            if name in system:
                return reply
        return DEFAULT_CANNED_REPLY

    def _constrained(self, counts: list[int], user: str, bank: str, per_char: bool) -> str:
        units = list(bank) if per_char else split_morae(bank)
        pos = _stable_offset(user, len(units))
        lines = []
        for k in counts:
            picked = [units[(pos + i) % len(units)] for i in range(k)]
            pos += k
            lines.append("".join(picked))
        return "\n".join(lines)


class SineSvs:
    """Debug synthesizer: one faded sine tone per note, silence in gaps.

    The voice spec is accepted but ignored; sustained continuation notes
    play back-to-back at their own pitches.
    """

    sample_rate_hz = SYNTHESIS_RATE

    def synthesize(self, score: MusicScore, voice: VoiceSpec) -> AudioBuffer:
        return sine_render(score)


def sine_render(score: MusicScore) -> AudioBuffer:
    """Render each note as a sine at its equal-temperament frequency,
    amplitude 0.5 full-scale, 10 ms linear fade-in/out."""
    sr = SYNTHESIS_RATE
    total = math.ceil(score.end_s() * sr - 1e-9)  # cover the last note fully
    out = np.zeros(total, dtype=np.float64)
    fade_n = round(FADE_S * sr)
    for entry in score.entries:
        for note in entry.notes:
            first = round(note.start_s * sr)
            last = round(note.end_s * sr)
            n = last - first
            if n <= 0:
                continue
            t = np.arange(n, dtype=np.float64) / sr
            tone = AMPLITUDE * np.sin(2.0 * np.pi * midi_pitch_to_hz(note.pitch) * t)
            k = min(fade_n, n // 2)
            if k > 0:
                ramp = np.linspace(0.0, 1.0, k, endpoint=False)
                tone[:k] *= ramp
                tone[n - k :] *= ramp[::-1]
            out[first:last] = tone
    samples = np.clip(np.rint(out * 32767.0), -32768, 32767).astype(np.int16)
    return AudioBuffer(samples, sr)
