"""One dialogue turn, end to end: speech in, sung reply out.

Stage order follows the cascade: transcribe, (optionally pick a melody
window and derive phrase constraints), generate the reply, normalize and
phonemize it, align syllables to notes, synthesize. Per-stage wall-clock
goes into TurnResult.latencies; constraint violations degrade into
diagnostics instead of failing the turn.
"""

from __future__ import annotations

import json
import random
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import audio as audio_mod
from .alignment import (
    PhraseConstraints,
    align_lyric_aware,
    align_one_to_one,
    extract_phrase_constraints,
)
from .audio import RECOGNITION_RATE, AudioBuffer, to_wav_b64
from .backends import (
    BackendKind,
    BackendRegistry,
    BackendSpec,
    asr_transcribe,
    default_registry,
    llm_complete,
    svs_synthesize,
)
from .errors import ConfigError, ParameterError, PipelineStageError
from .lyrics import FallbackG2P, KanaBackend, LyricLines, g2p, normalize_lyrics
from .melody import (
    MelodyRegistry,
    RandomMelodyParams,
    WindowRequest,
    generate_random_melody,
    sample_window,
)
from .prompting import CharacterRegistry, build_prompt, builtin_characters
from .score import Language, Melody, MusicScore, score_to_dict

STAGES = ("asr", "melody", "llm", "lyrics", "align", "svs")

ALIGNMENT_STRATEGIES = ("forced_random", "pitch_based", "lyric_aware")
DEFAULT_WINDOW_PHRASES = 4


@dataclass(frozen=True)
class MelodySourceConfig:
    """Where the turn's melody comes from.

    kind 'random' draws fresh notes; 'dataset' samples a window from a
    registry melody (a fixed melody_id, or seeded choice when absent).
    """

    kind: str = "random"
    pitch_low: int = 60
    pitch_high: int = 72
    dur_low_s: float = 0.2
    dur_high_s: float = 0.8
    melody_id: str | None = None
    window_notes: int | None = None
    window_phrases: int | None = None

    def random_params(self, n_notes: int, seed: int) -> RandomMelodyParams:
        return RandomMelodyParams(
            n_notes=n_notes,
            pitch_low=self.pitch_low,
            pitch_high=self.pitch_high,
            dur_low_s=self.dur_low_s,
            dur_high_s=self.dur_high_s,
            seed=seed,
        )


@dataclass(frozen=True)
class PipelineConfig:
    character_id: str = "limei"
    language: Language = Language.ZH
    asr: BackendSpec = BackendSpec(BackendKind.ASR, "stub")
    llm: BackendSpec = BackendSpec(BackendKind.LLM, "stub")
    svs: BackendSpec = BackendSpec(BackendKind.SVS, "sine")
    scorer: BackendSpec | None = None
    g2p_name: str = "fallback"
    melody_source: MelodySourceConfig = MelodySourceConfig()
    alignment_strategy: str = "forced_random"
    use_phrase_constraints: bool = False
    history_window: int = 5
    seed: int = 0

    def validate(self) -> None:
        if self.alignment_strategy not in ALIGNMENT_STRATEGIES:
            raise ConfigError(f"unknown alignment strategy '{self.alignment_strategy}'")
        if self.melody_source.kind not in ("random", "dataset"):
            raise ConfigError(f"unknown melody source kind '{self.melody_source.kind}'")
        if self.alignment_strategy == "forced_random" and self.melody_source.kind != "random":
            raise ConfigError("forced_random alignment requires the random melody source")
        if self.alignment_strategy == "lyric_aware" and self.melody_source.kind != "dataset":
            raise ConfigError("lyric_aware alignment requires an annotated dataset melody")
        if self.use_phrase_constraints and self.melody_source.kind != "dataset":
            raise ConfigError("phrase constraints need dataset melodies with phrase annotations")
        if self.history_window < 0:
            raise ConfigError(f"history_window must be >= 0, got {self.history_window}")

    def to_dict(self) -> dict[str, Any]:
        def spec_dict(spec: BackendSpec | None):
            if spec is None:
                return None
            return {
                "kind": spec.kind.value,
                "name": spec.name,
                "endpoint": spec.endpoint,
                "timeout_s": spec.timeout_s,
                "retries": spec.retries,
            }

        ms = self.melody_source
        return {
            "character_id": self.character_id,
            "language": self.language.value,
            "asr": spec_dict(self.asr),
            "llm": spec_dict(self.llm),
            "svs": spec_dict(self.svs),
            "scorer": spec_dict(self.scorer),
            "g2p_name": self.g2p_name,
            "melody_source": {
                "kind": ms.kind,
                "pitch_low": ms.pitch_low,
                "pitch_high": ms.pitch_high,
                "dur_low_s": ms.dur_low_s,
                "dur_high_s": ms.dur_high_s,
                "melody_id": ms.melody_id,
                "window_notes": ms.window_notes,
                "window_phrases": ms.window_phrases,
            },
            "alignment_strategy": self.alignment_strategy,
            "use_phrase_constraints": self.use_phrase_constraints,
            "history_window": self.history_window,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any], base: "PipelineConfig" | None = None) -> "PipelineConfig":
        """Build a config from a dict, optionally overriding a base."""
        known = {
            "character_id", "language", "asr", "llm", "svs", "scorer", "g2p_name",
            "melody_source", "alignment_strategy", "use_phrase_constraints",
            "history_window", "seed",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field '{sorted(unknown)[0]}'")
        cfg = base or cls()
        updates: dict[str, Any] = {}
        try:
            if "character_id" in data:
                updates["character_id"] = str(data["character_id"])
            if "language" in data:
                updates["language"] = Language(data["language"])
            for kind_name, kind in (("asr", BackendKind.ASR), ("llm", BackendKind.LLM),
                                    ("svs", BackendKind.SVS), ("scorer", BackendKind.SCORER)):
                if kind_name in data:
                    raw = data[kind_name]
                    if raw is None:
                        updates[kind_name] = None
                    else:
                        updates[kind_name] = BackendSpec(
                            kind=kind,
                            name=str(raw.get("name", "stub")),
                            endpoint=raw.get("endpoint"),
                            auth=raw.get("auth"),
                            timeout_s=float(raw.get("timeout_s", 30.0)),
                            retries=int(raw.get("retries", 1)),
                        )
            if "g2p_name" in data:
                updates["g2p_name"] = str(data["g2p_name"])
            if "melody_source" in data:
                ms = data["melody_source"]
                updates["melody_source"] = MelodySourceConfig(
                    kind=str(ms.get("kind", "random")),
                    pitch_low=int(ms.get("pitch_low", 60)),
                    pitch_high=int(ms.get("pitch_high", 72)),
                    dur_low_s=float(ms.get("dur_low_s", 0.2)),
                    dur_high_s=float(ms.get("dur_high_s", 0.8)),
                    melody_id=ms.get("melody_id"),
                    window_notes=ms.get("window_notes"),
                    window_phrases=ms.get("window_phrases"),
                )
            if "alignment_strategy" in data:
                updates["alignment_strategy"] = str(data["alignment_strategy"])
            if "use_phrase_constraints" in data:
                updates["use_phrase_constraints"] = bool(data["use_phrase_constraints"])
            if "history_window" in data:
                updates["history_window"] = int(data["history_window"])
            if "seed" in data:
                updates["seed"] = int(data["seed"])
        except (TypeError, ValueError, AttributeError) as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc
        cfg = replace(cfg, **updates)
        cfg.validate()
        return cfg


@dataclass(frozen=True)
class TurnResult:
    transcript: str
    reply: str
    lyric_lines: LyricLines
    score: MusicScore
    audio: AudioBuffer
    latencies: dict[str, float]
    diagnostics: tuple[str, ...]
    config: PipelineConfig
    seed: int
    melody_id: str
    timestamp: float

    def to_dict(self, deterministic: bool = False) -> dict[str, Any]:
        """Serialized form; the deterministic variant drops wall-clock
        fields so identical seeded runs serialize byte-identically."""
        out: dict[str, Any] = {
            "transcript": self.transcript,
            "reply": self.reply,
            "lyric_lines": [
                {"raw": line.raw, "syllables": list(line.syllables)}
                for line in self.lyric_lines.lines
            ],
            "score": score_to_dict(self.score),
            "audio_b64": to_wav_b64(self.audio),
            "sample_rate": self.audio.sample_rate_hz,
            "diagnostics": list(self.diagnostics),
            "config": self.config.to_dict(),
            "seed": self.seed,
            "melody_id": self.melody_id,
        }
        if not deterministic:
            out["latencies"] = dict(self.latencies)
            out["timestamp"] = self.timestamp
        return out

    def to_json(self, deterministic: bool = False) -> str:
        return json.dumps(self.to_dict(deterministic), ensure_ascii=False, sort_keys=True)


@dataclass
class Session:
    id: str
    history: list[tuple[str, str]] = field(default_factory=list)
    last_used: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def snapshot_history(self) -> list[tuple[str, str]]:
        return list(self.history)

    def save(self, path: str | Path) -> None:
        payload = {"id": self.id, "history": [list(t) for t in self.history]}
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Session":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(id=payload["id"], history=[tuple(t) for t in payload["history"]])


def session_append(session: Session, turn: TurnResult) -> Session:
    """Record a finished turn; history is trimmed to the config window."""
    session.history.append((turn.transcript, turn.reply))
    window = turn.config.history_window
    if window == 0:
        session.history.clear()
    else:
        del session.history[:-window]
    session.last_used = time.time()
    return session


class Pipeline:
    """Holds resolved registries and runs turns against them."""

    def __init__(
        self,
        backends: BackendRegistry | None = None,
        characters: CharacterRegistry | None = None,
        melodies: MelodyRegistry | None = None,
        kana: KanaBackend | None = None,
    ):
        self.backends = backends or default_registry()
        self.characters = characters or builtin_characters()
        self.melodies = melodies
        self.kana = kana

    def _g2p_backend(self, cfg: PipelineConfig):
        if cfg.g2p_name == "fallback":
            return FallbackG2P()
        return self.backends.resolve(
            BackendSpec(BackendKind.KANA_G2P, cfg.g2p_name)
        )

    def run_turn(self, session: Session, audio_in: AudioBuffer, cfg: PipelineConfig) -> TurnResult:
        """Execute one turn; any stage failure aborts with the stage name
        and leaves the session untouched."""
        cfg.validate()
        if len(audio_in) == 0:
            raise ParameterError("input audio is empty")
        character = self.characters.get(cfg.character_id)
        asr = self.backends.resolve(cfg.asr)
        llm = self.backends.resolve(cfg.llm)
        svs = self.backends.resolve(cfg.svs)
        g2p_backend = self._g2p_backend(cfg)

        latencies: dict[str, float] = {}
        diagnostics: list[str] = []
        turn_started = time.time()
        rng = random.Random(cfg.seed)
        history = session.snapshot_history()

        def timed(stage: str):
            return _StageTimer(stage, latencies)

        with _stage("asr"):
            with timed("asr"):
                audio16 = audio_mod.resample(audio_in, RECOGNITION_RATE)
                transcript = asr_transcribe(audio16, cfg.language, asr).text

        melody: Melody | None = None
        constraints: PhraseConstraints | None = None
        if cfg.use_phrase_constraints:
            with _stage("melody"):
                with timed("melody"):
                    melody = self._select_phrase_window(cfg, rng, n_lines=None)
                    strategy = (
                        "lyric_aware" if cfg.alignment_strategy == "lyric_aware" else "pitch_based"
                    )
                    constraints = extract_phrase_constraints(melody, strategy)

        with _stage("llm"):
            with timed("llm"):
                bundle = build_prompt(character, constraints, transcript, history)
                reply = llm_complete(bundle.system, bundle.user, history, llm).text

        with _stage("lyrics"):
            with timed("lyrics"):
                lines = normalize_lyrics(reply, cfg.language, self.kana)
                phonemized = g2p(lines, cfg.language, g2p_backend)

        if constraints is not None:
            got = lines.syllable_counts()
            want = list(constraints.counts)
            if got != want:
                diagnostics.append(
                    f"reply syllable counts {got} do not match phrase constraints {want}"
                )

        if melody is None:
            with _stage("melody"):
                with timed("melody"):
                    melody = self._size_melody(cfg, rng, lines)

        with _stage("align"):
            with timed("align"):
                score = self._align(cfg, melody, lines, diagnostics)
                score = attach_phonemes(score, lines, phonemized)

        with _stage("svs"):
            with timed("svs"):
                sung = svs_synthesize(score, character.voice, svs).audio

        return TurnResult(
            transcript=transcript,
            reply=reply,
            lyric_lines=lines,
            score=score,
            audio=sung,
            latencies=latencies,
            diagnostics=tuple(diagnostics),
            config=cfg,
            seed=cfg.seed,
            melody_id=melody.id,
            timestamp=turn_started,
        )

    # -- melody selection ---------------------------------------------------

    def _pick_dataset_melody(self, cfg: PipelineConfig, rng: random.Random) -> Melody:
        if self.melodies is None or not self.melodies.entries:
            raise ConfigError("dataset melody source configured but no melodies are loaded")
        ms = cfg.melody_source
        if ms.melody_id is not None:
            return self.melodies.get(ms.melody_id)
        return self.melodies.get(rng.choice(sorted(self.melodies.ids())))

    def _select_phrase_window(
        self, cfg: PipelineConfig, rng: random.Random, n_lines: int | None
    ) -> Melody:
        base = self._pick_dataset_melody(cfg, rng)
        n_phrases = cfg.melody_source.window_phrases
        if n_phrases is None:
            available = len(base.phrases or ())
            wanted = n_lines if n_lines is not None else DEFAULT_WINDOW_PHRASES
            n_phrases = max(1, min(wanted, available)) if available else wanted
        return sample_window(base, WindowRequest(whole_phrases=n_phrases), rng.randrange(2**32))

    def _size_melody(self, cfg: PipelineConfig, rng: random.Random, lines: LyricLines) -> Melody:
        """Unconstrained path: melody sizing follows the reply."""
        total = lines.total_syllables()
        if cfg.melody_source.kind == "random":
            return generate_random_melody(cfg.melody_source.random_params(total, cfg.seed))
        if cfg.alignment_strategy == "lyric_aware":
            return self._select_phrase_window(cfg, rng, n_lines=len(lines.lines))
        base = self._pick_dataset_melody(cfg, rng)
        request = WindowRequest(n_notes=cfg.melody_source.window_notes or total)
        return sample_window(base, request, rng.randrange(2**32))

    # -- alignment ------------------------------------------------------------

    def _align(
        self,
        cfg: PipelineConfig,
        melody: Melody,
        lines: LyricLines,
        diagnostics: list[str],
    ) -> MusicScore:
        if cfg.alignment_strategy == "lyric_aware":
            per_phrase = [list(line.syllables) for line in lines.lines]
            n_phrases = len(melody.phrases or ())
            if len(per_phrase) > n_phrases:
                diagnostics.append(
                    f"{len(per_phrase)} lyric lines for {n_phrases} phrases; surplus lines dropped"
                )
            elif len(per_phrase) < n_phrases:
                diagnostics.append(
                    f"{len(per_phrase)} lyric lines for {n_phrases} phrases; trailing phrases unsung"
                )
            return align_lyric_aware(per_phrase, melody)

        syllables = lines.flat_syllables()
        if len(syllables) > len(melody.notes):
            diagnostics.append(
                f"{len(syllables)} syllables for {len(melody.notes)} notes; surplus syllables dropped"
            )
            syllables = syllables[: len(melody.notes)]
        elif len(syllables) < len(melody.notes):
            diagnostics.append(
                f"{len(syllables)} syllables for {len(melody.notes)} notes; surplus notes dropped"
            )
        return align_one_to_one(syllables, melody)


def attach_phonemes(score: MusicScore, lines: LyricLines, phonemized) -> MusicScore:
    """Copy per-syllable phoneme tokens onto the aligned entries."""
    from .score import ScoreEntry

    tokens = phonemized.flat()
    entries = []
    for i, entry in enumerate(score.entries):
        phonemes = tuple(tokens[i]) if i < len(tokens) else (entry.syllable,)
        entries.append(
            ScoreEntry(
                syllable=entry.syllable,
                phonemes=phonemes,
                notes=entry.notes,
                sustained=entry.sustained,
            )
        )
    return MusicScore(entries=tuple(entries))


class _StageTimer:
    def __init__(self, stage: str, sink: dict[str, float]):
        self.stage = stage
        self.sink = sink

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        self.sink[self.stage] = self.sink.get(self.stage, 0.0) + elapsed
        return False


class _stage:
    """Wrap stage errors with the stage identity."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and isinstance(exc, Exception) and not isinstance(exc, PipelineStageError):
            raise PipelineStageError(self.name, exc) from exc
        return False
