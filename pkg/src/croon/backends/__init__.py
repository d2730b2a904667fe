"""Backend adapter contracts and the name-keyed registry.

Each pipeline stage (ASR, LLM, SVS, kana/G2P, quality scorer) is served
by an adapter resolved from a BackendSpec. Built-in deterministic stubs
make every stage runnable offline; HTTP adapters speak the wire bodies
documented in docs/formats.md. Every call is timed around the full
round trip including (de)serialization.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass
from typing import Any, Callable, Protocol

from ..audio import AudioBuffer
from ..errors import ConfigError, ConflictError, FeatureDisabledError, NotFoundError, ParameterError
from ..prompting import VoiceSpec
from ..score import Language, MusicScore

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_RETRIES = 1


class BackendKind(str, enum.Enum):
    ASR = "asr"
    LLM = "llm"
    SVS = "svs"
    KANA_G2P = "kana_g2p"
    SCORER = "scorer"


@dataclass(frozen=True)
class BackendSpec:
    kind: BackendKind
    name: str
    endpoint: str | None = None
    auth: str | None = None
    timeout_s: float = DEFAULT_TIMEOUT_S
    retries: int = DEFAULT_RETRIES

    def __post_init__(self):
        if self.retries < 0:
            raise ParameterError(f"retries must be >= 0, got {self.retries}")


class AsrAdapter(Protocol):
    def transcribe(self, audio: AudioBuffer, language: Language) -> str: ...


class LlmAdapter(Protocol):
    def complete(self, system: str, messages: list[dict[str, str]]) -> str: ...


class SvsAdapter(Protocol):
    def synthesize(self, score: MusicScore, voice: VoiceSpec) -> AudioBuffer: ...


class ScorerAdapter(Protocol):
    def score(self, audio: AudioBuffer) -> float: ...


@dataclass(frozen=True)
class TimedText:
    text: str
    elapsed_s: float


@dataclass(frozen=True)
class TimedAudio:
    audio: AudioBuffer
    elapsed_s: float


def asr_transcribe(audio: AudioBuffer, language: Language, adapter: AsrAdapter) -> TimedText:
    """Transcribe mono 16 kHz audio; the language is fixed by the caller."""
    if audio.sample_rate_hz != 16000:
        raise ParameterError(f"ASR expects 16 kHz input, got {audio.sample_rate_hz}")
    if len(audio) == 0:
        raise ParameterError("ASR input audio is empty")
    start = time.perf_counter()
    text = adapter.transcribe(audio, language)
    return TimedText(text=text, elapsed_s=time.perf_counter() - start)


def llm_complete(system: str, user: str, history: list[tuple[str, str]], adapter: LlmAdapter) -> TimedText:
    """One chat completion; history rides as alternating prior turns."""
    messages: list[dict[str, str]] = []
    for past_user, past_reply in history:
        messages.append({"role": "user", "content": past_user})
        messages.append({"role": "assistant", "content": past_reply})
    messages.append({"role": "user", "content": user})
    start = time.perf_counter()
    text = adapter.complete(system, messages)
    return TimedText(text=text, elapsed_s=time.perf_counter() - start)


def svs_synthesize(score: MusicScore, voice: VoiceSpec, adapter: SvsAdapter) -> TimedAudio:
    """Render a music score to sung audio at 44.1 kHz."""
    if not score.entries:
        raise ParameterError("music score has no entries")
    start = time.perf_counter()
    audio = adapter.synthesize(score, voice)
    elapsed = time.perf_counter() - start
    # one sample of slack: durations are quantized to whole samples
    if audio.duration_s() < score.end_s() - 1.0 / audio.sample_rate_hz:
        raise ParameterError(
            f"SVS output shorter than score: {audio.duration_s():.3f}s < {score.end_s():.3f}s"
        )
    return TimedAudio(audio=audio, elapsed_s=elapsed)


def score_quality(audio: AudioBuffer, adapter: ScorerAdapter | None) -> float:
    """Scalar quality estimate from an external scorer, when configured."""
    if adapter is None:
        raise FeatureDisabledError("no quality scorer backend is configured")
    return float(adapter.score(audio))


class BackendRegistry:
    """Adapter factories and instances keyed by (kind, name)."""

    def __init__(self):
        self._factories: dict[tuple[BackendKind, str], Callable[[BackendSpec], Any]] = {}
        self._instances: dict[tuple[BackendKind, str], Any] = {}

    def register_factory(self, kind: BackendKind, name: str, factory: Callable[[BackendSpec], Any]) -> None:
        key = (kind, name)
        if key in self._factories:
            raise ConflictError(f"backend factory {kind.value}/{name} already registered")
        self._factories[key] = factory

    def register_instance(self, kind: BackendKind, name: str, adapter: Any) -> None:
        self._instances[(kind, name)] = adapter

    def resolve(self, spec: BackendSpec) -> Any:
        key = (spec.kind, spec.name)
        if key in self._instances:
            return self._instances[key]
        factory = self._factories.get(key)
        if factory is None:
            raise NotFoundError(f"no backend registered for {spec.kind.value}/{spec.name}")
        adapter = factory(spec)
        return adapter

    def names(self, kind: BackendKind) -> list[str]:
        names = {name for k, name in self._factories if k == kind}
        names.update(name for k, name in self._instances if k == kind)
        return sorted(names)


def default_registry() -> BackendRegistry:
    """Registry with built-in stubs and HTTP adapters pre-registered."""
    from . import http, stubs

    registry = BackendRegistry()

    def _builtin(ctor):
        def build(spec: BackendSpec):
            if spec.endpoint:
                raise ConfigError(
                    f"built-in backend {spec.kind.value}/{spec.name} takes no endpoint"
                )
            return ctor()

        return build

    registry.register_factory(BackendKind.ASR, "stub", _builtin(stubs.StubAsr))
    registry.register_factory(BackendKind.LLM, "stub", _builtin(stubs.StubLlm))
    registry.register_factory(BackendKind.SVS, "sine", _builtin(stubs.SineSvs))

    def _needs_endpoint(ctor):
        def build(spec: BackendSpec):
            if not spec.endpoint:
                raise ConfigError(f"HTTP backend {spec.kind.value}/{spec.name} needs an endpoint")
            return ctor(spec)

        return build

    registry.register_factory(BackendKind.ASR, "http", _needs_endpoint(http.HttpAsr))
    registry.register_factory(BackendKind.LLM, "http", _needs_endpoint(http.HttpLlm))
    registry.register_factory(BackendKind.SVS, "http", _needs_endpoint(http.HttpSvs))
    registry.register_factory(BackendKind.SCORER, "http", _needs_endpoint(http.HttpScorer))
    registry.register_factory(BackendKind.KANA_G2P, "http", _needs_endpoint(http.HttpG2P))
    return registry
