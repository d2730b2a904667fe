"""HTTP backend adapters speaking this package's wire contracts.

Bodies are JSON; audio travels as base64 RIFF PCM WAV. Timeouts and 5xx
responses are retried exactly spec.retries times, 4xx never. Each
adapter bounds concurrent in-flight requests per endpoint and queues
beyond the bound.
"""

from __future__ import annotations

import threading
from typing import Any

import httpx

from ..audio import AudioBuffer, from_wav_b64, to_wav_b64
from ..errors import BackendError, BackendUnavailableError
from ..prompting import VoiceSpec
from ..score import Language, MusicScore, score_to_dict
from . import BackendSpec

MAX_IN_FLIGHT = 4


class _HttpAdapter:
    def __init__(self, spec: BackendSpec, max_in_flight: int = MAX_IN_FLIGHT):
        self.spec = spec
        headers = {}
        if spec.auth:
            headers["Authorization"] = f"Bearer {spec.auth}"
        self._client = httpx.Client(timeout=spec.timeout_s, headers=headers)
        self._gate = threading.Semaphore(max_in_flight)

    def _post(self, payload: dict[str, Any]) -> dict[str, Any]:
        attempts = 1 + self.spec.retries
        last_error = "no attempt made"
        for _ in range(attempts):
            try:
                with self._gate:
                    response = self._client.post(self.spec.endpoint, json=payload)
            except (httpx.TimeoutException, httpx.TransportError) as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if response.status_code >= 500:
                last_error = f"HTTP {response.status_code}: {response.text[:200]}"
                continue
            if response.status_code >= 400:
                raise BackendError(
                    f"{self.spec.kind.value}/{self.spec.name} rejected the request",
                    f"HTTP {response.status_code}: {response.text[:200]}",
                )
            try:
                return response.json()
            except ValueError as exc:
                raise BackendError(
                    f"{self.spec.kind.value}/{self.spec.name} returned non-JSON", str(exc)
                ) from exc
        raise BackendUnavailableError(
            f"{self.spec.kind.value}/{self.spec.name} unavailable after "
            f"{attempts} attempt(s)",
            last_error,
        )

    def close(self) -> None:
        self._client.close()


class HttpAsr(_HttpAdapter):
    """POST {audio_b64, language} -> {text}"""

    def transcribe(self, audio: AudioBuffer, language: Language) -> str:
        body = self._post({"audio_b64": to_wav_b64(audio), "language": language.value})
        return str(body["text"])


class HttpLlm(_HttpAdapter):
    """POST {system, messages: [{role, content}...]} -> {text}"""

    def complete(self, system: str, messages: list[dict[str, str]]) -> str:
        body = self._post({"system": system, "messages": messages})
        return str(body["text"])


class HttpSvs(_HttpAdapter):
    """POST {score, voice} -> {audio_b64, sample_rate}"""

    def synthesize(self, score: MusicScore, voice: VoiceSpec) -> AudioBuffer:
        if voice.speaker_id is not None:
            voice_payload: dict[str, Any] = {"speaker_id": voice.speaker_id}
        else:
            voice_payload = {"embedding": list(voice.embedding)}
        body = self._post({"score": score_to_dict(score), "voice": voice_payload})
        audio = from_wav_b64(body["audio_b64"])
        declared = int(body.get("sample_rate", audio.sample_rate_hz))
        if declared != audio.sample_rate_hz:
            raise BackendError(
                f"{self.spec.name} declared sample_rate {declared} "
                f"but WAV says {audio.sample_rate_hz}"
            )
        return audio


class HttpScorer(_HttpAdapter):
    """POST {audio_b64} -> {score}"""

    def score(self, audio: AudioBuffer) -> float:
        body = self._post({"audio_b64": to_wav_b64(audio)})
        return float(body["score"])


class HttpG2P(_HttpAdapter):
    """POST {text, language} -> {syllables: [[token...]...]} (G2P) or
    {kana} (kana conversion); one endpoint may serve either role."""

    name = "http"

    def phonemize(self, syllables: list[str], language: Language) -> list[list[str]]:
        body = self._post({"text": "".join(syllables), "language": language.value})
        return [[str(t) for t in syl] for syl in body["syllables"]]

    def to_kana(self, text: str) -> str:
        body = self._post({"text": text, "language": Language.JA.value})
        return str(body["kana"])
