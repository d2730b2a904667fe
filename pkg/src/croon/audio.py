"""Mono 16-bit PCM audio buffers plus WAV and base64 WAV codecs.

Two sample rates exist in the pipeline: 16 kHz on the recognition path
and 44.1 kHz on the synthesis path.
"""

from __future__ import annotations

import base64
import hashlib
import io
import wave
from dataclasses import dataclass

import numpy as np
from scipy.signal import resample_poly

from .errors import ParameterError, ParseError

RECOGNITION_RATE = 16000
SYNTHESIS_RATE = 44100
VALID_RATES = (RECOGNITION_RATE, SYNTHESIS_RATE)


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono PCM buffer; samples are int16."""

    samples: np.ndarray
    sample_rate_hz: int
    channels: int = 1

    def __post_init__(self):
        if self.channels != 1:
            raise ParameterError(f"only mono audio supported, got {self.channels} channels")
        if self.sample_rate_hz not in VALID_RATES:
            raise ParameterError(
                f"sample rate {self.sample_rate_hz} not in {sorted(VALID_RATES)}"
            )
        if self.samples.dtype != np.int16:
            raise ParameterError(f"samples must be int16, got {self.samples.dtype}")
        self.samples.setflags(write=False)

    def __len__(self) -> int:
        return len(self.samples)

    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def fingerprint(self) -> str:
        """Content digest identifying this buffer (stub-ASR lookup key)."""
        h = hashlib.sha256()
        h.update(str(self.sample_rate_hz).encode())
        h.update(self.samples.tobytes())
        return h.hexdigest()


def silence(duration_s: float, sample_rate_hz: int = SYNTHESIS_RATE) -> AudioBuffer:
    n = round(duration_s * sample_rate_hz)
    return AudioBuffer(np.zeros(n, dtype=np.int16), sample_rate_hz)


def resample(audio: AudioBuffer, target_rate_hz: int) -> AudioBuffer:
    """Polyphase-resample between the two supported rates."""
    if target_rate_hz == audio.sample_rate_hz:
        return audio
    if target_rate_hz not in VALID_RATES:
        raise ParameterError(f"cannot resample to {target_rate_hz}")
    # 44100 -> 16000 is 160/441 (and the inverse going up)
    floats = audio.samples.astype(np.float64)
    out = resample_poly(floats, target_rate_hz, audio.sample_rate_hz)
    clipped = np.clip(np.rint(out), -32768, 32767).astype(np.int16)
    return AudioBuffer(clipped, target_rate_hz)


def to_wav_bytes(audio: AudioBuffer) -> bytes:
    """RIFF PCM container, 16-bit mono."""
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(audio.sample_rate_hz)
        w.writeframes(audio.samples.tobytes())
    return buf.getvalue()


def from_wav_bytes(data: bytes) -> AudioBuffer:
    """Decode a RIFF PCM WAV; multichannel input is downmixed to mono and
    off-rate input resampled to the nearer supported rate."""
    if data[:4] != b"RIFF":
        raise ParseError("not a RIFF container", 0)
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            n_channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            frames = w.readframes(w.getnframes())
    except wave.Error as exc:
        raise ParseError(f"bad WAV: {exc}", 0) from exc
    if width != 2:
        raise ParseError(f"only 16-bit PCM supported, got {8 * width}-bit", 0)
    samples = np.frombuffer(frames, dtype=np.int16)
    if n_channels > 1:
        samples = samples.reshape(-1, n_channels).mean(axis=1)
        samples = np.clip(np.rint(samples), -32768, 32767).astype(np.int16)
    if rate in VALID_RATES:
        return AudioBuffer(samples, rate)
    # resample arbitrary-rate uploads to the nearest supported rate
    target = RECOGNITION_RATE if rate <= 24000 else SYNTHESIS_RATE
    floats = samples.astype(np.float64)
    out = resample_poly(floats, target, rate)
    return AudioBuffer(np.clip(np.rint(out), -32768, 32767).astype(np.int16), target)


def to_wav_b64(audio: AudioBuffer) -> str:
    return base64.b64encode(to_wav_bytes(audio)).decode("ascii")


def from_wav_b64(text: str) -> AudioBuffer:
    try:
        raw = base64.b64decode(text, validate=True)
    except Exception as exc:
        raise ParseError(f"bad base64: {exc}", 0) from exc
    return from_wav_bytes(raw)


def write_wav(path, audio: AudioBuffer) -> None:
    with open(path, "wb") as f:
        f.write(to_wav_bytes(audio))


def read_wav(path) -> AudioBuffer:
    with open(path, "rb") as f:
        return from_wav_bytes(f.read())
