from __future__ import annotations

import numpy as np
import pytest

from croon.audio import (
    AudioBuffer,
    from_wav_b64,
    from_wav_bytes,
    resample,
    silence,
    to_wav_b64,
    to_wav_bytes,
)
from croon.errors import ParameterError, ParseError


def buf(n=1000, rate=16000, value=100):
    return AudioBuffer(np.full(n, value, dtype=np.int16), rate)


def test_rejects_stereo():
    with pytest.raises(ParameterError):
        AudioBuffer(np.zeros(10, dtype=np.int16), 16000, channels=2)


def test_rejects_odd_rate():
    with pytest.raises(ParameterError):
        AudioBuffer(np.zeros(10, dtype=np.int16), 22050)


def test_wav_round_trip():
    a = buf()
    b = from_wav_bytes(to_wav_bytes(a))
    assert b.sample_rate_hz == a.sample_rate_hz
    assert np.array_equal(b.samples, a.samples)


def test_b64_round_trip():
    a = buf(rate=44100)
    b = from_wav_b64(to_wav_b64(a))
    assert np.array_equal(b.samples, a.samples)


def test_not_riff_rejected():
    with pytest.raises(ParseError):
        from_wav_bytes(b"OggS" + b"\x00" * 64)


def test_bad_base64_rejected():
    with pytest.raises(ParseError):
        from_wav_b64("@@@not-base64@@@")


def test_resample_preserves_duration():
    a = silence(0.5, 44100)
    b = resample(a, 16000)
    assert b.sample_rate_hz == 16000
    assert b.duration_s() == pytest.approx(0.5, abs=0.01)


def test_resample_preserves_tone():
    # a 440 Hz tone should still be 440 Hz after 44.1k -> 16k
    t = np.arange(44100) / 44100.0
    a = AudioBuffer((0.4 * 32767 * np.sin(2 * np.pi * 440 * t)).astype(np.int16), 44100)
    b = resample(a, 16000)
    spectrum = np.abs(np.fft.rfft(b.samples.astype(np.float64)))
    peak_hz = np.argmax(spectrum) * 16000 / len(b.samples)
    assert peak_hz == pytest.approx(440.0, abs=2.0)


def test_fingerprint_changes_with_content():
    assert buf(value=1).fingerprint() != buf(value=2).fingerprint()
    assert buf(value=1).fingerprint() == buf(value=1).fingerprint()


def test_stereo_wav_downmixes():
    import io
    import wave

    frames = np.array([100, 300] * 50, dtype=np.int16)  # L=100, R=300
    raw = io.BytesIO()
    with wave.open(raw, "wb") as w:
        w.setnchannels(2)
        w.setsampwidth(2)
        w.setframerate(16000)
        w.writeframes(frames.tobytes())
    a = from_wav_bytes(raw.getvalue())
    assert a.channels == 1
    assert int(a.samples[0]) == 200
