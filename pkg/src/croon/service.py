"""HTTP service exposing the pipeline, registries, and evaluation.

Errors come back as {stage, field, code, message} with no stack traces;
audio rides base64 inside JSON bodies. Sessions are in-memory, serialized
per id, and expire after a configurable idle period.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml
from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

import httpx

from .audio import from_wav_b64
from .backends import BackendKind, BackendSpec
from .errors import (
    BackendUnavailableError,
    ConfigError,
    CroonError,
    EmptyLyricsError,
    NotFoundError,
    ParameterError,
    ParseError,
    PipelineStageError,
)
from .evaluate import EvalItem, run_eval
from .melody import MelodyRegistry, load_dataset
from .pipeline import Pipeline, PipelineConfig, Session, session_append
from .prompting import CharacterRegistry, builtin_characters

DEFAULT_PORT = 8080
DEFAULT_IDLE_S = 30 * 60
DEFAULT_BODY_CAP = 10 * 1024 * 1024


@dataclass
class ServiceConfig:
    port: int = DEFAULT_PORT
    origins: list[str] = field(default_factory=lambda: ["*"])
    datasets: list[dict[str, str]] = field(default_factory=list)
    characters_dir: str | None = None
    defaults: dict[str, Any] = field(default_factory=dict)
    session_idle_s: float = DEFAULT_IDLE_S
    max_body_bytes: int = DEFAULT_BODY_CAP

    @classmethod
    def load(cls, path: str | Path) -> "ServiceConfig":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        cfg = cls()
        for name in ("port", "origins", "datasets", "characters_dir", "defaults",
                     "session_idle_s", "max_body_bytes"):
            if name in raw:
                setattr(cfg, name, raw[name])
        return cfg


class SessionStore:
    def __init__(self, idle_s: float):
        self.idle_s = idle_s
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def get(self, session_id: str) -> Session:
        now = time.time()
        with self._lock:
            expired = [
                sid for sid, s in self._sessions.items() if now - s.last_used > self.idle_s
            ]
            for sid in expired:
                del self._sessions[sid]
            if session_id not in self._sessions:
                self._sessions[session_id] = Session(id=session_id)
            return self._sessions[session_id]


def _error_body(code: str, message: str, stage: str | None = None, fld: str | None = None):
    body: dict[str, Any] = {"code": code, "message": message}
    if stage:
        body["stage"] = stage
    if fld:
        body["field"] = fld
    return body


def _map_error(exc: Exception) -> JSONResponse:
    stage = None
    if isinstance(exc, PipelineStageError):
        stage = exc.stage
        exc = exc.cause
    if isinstance(exc, NotFoundError):
        status = 404
    elif isinstance(exc, EmptyLyricsError):
        status = 422
    elif isinstance(exc, BackendUnavailableError):
        status = 502
    elif isinstance(exc, (ParseError, ParameterError, ConfigError)):
        status = 400
    elif isinstance(exc, CroonError):
        status = 400
    else:
        status = 500
    code = getattr(exc, "code", "error")
    return JSONResponse(status_code=status, content=_error_body(code, str(exc), stage=stage))


def build_pipeline(config: ServiceConfig) -> Pipeline:
    characters: CharacterRegistry = builtin_characters()
    if config.characters_dir:
        for path in sorted(Path(config.characters_dir).glob("*.yaml")):
            characters.register_file(path)
    melodies: MelodyRegistry | None = None
    for spec in config.datasets:
        loaded = load_dataset(spec["path"], spec["format"])
        if melodies is None:
            melodies = loaded
        else:
            for melody in loaded.entries.values():
                melodies.add(melody)
            melodies.warnings.extend(loaded.warnings)
    return Pipeline(characters=characters, melodies=melodies)


def create_app(config: ServiceConfig | None = None, pipeline: Pipeline | None = None) -> FastAPI:
    config = config or ServiceConfig()
    pipeline = pipeline or build_pipeline(config)
    sessions = SessionStore(config.session_idle_s)
    base_cfg = PipelineConfig.from_dict(config.defaults) if config.defaults else PipelineConfig()

    app = FastAPI(title="croon", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=config.origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.pipeline = pipeline
    app.state.base_cfg = base_cfg

    @app.middleware("http")
    async def cap_body(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > config.max_body_bytes:
            return JSONResponse(
                status_code=413,
                content=_error_body("too_large", f"body exceeds {config.max_body_bytes} bytes"),
            )
        return await call_next(request)

    @app.exception_handler(CroonError)
    async def handle_croon_error(request: Request, exc: CroonError):
        return _map_error(exc)

    @app.post("/api/turn")
    def api_turn(payload: dict[str, Any]):  # sync: runs in the threadpool so
        # per-session locks serialize turns without blocking the event loop
        session_id = payload.get("session_id")
        audio_b64 = payload.get("audio_b64")
        if not session_id or not isinstance(session_id, str):
            return JSONResponse(
                status_code=400, content=_error_body("config", "session_id required", fld="session_id")
            )
        if not audio_b64 or not isinstance(audio_b64, str):
            return JSONResponse(
                status_code=400, content=_error_body("config", "audio_b64 required", fld="audio_b64")
            )
        try:
            audio = from_wav_b64(audio_b64)
            cfg = PipelineConfig.from_dict(payload.get("config") or {}, base=base_cfg)
        except CroonError as exc:
            return _map_error(exc)
        session = sessions.get(session_id)
        try:
            with session.lock:  # turns within one session are serialized
                turn = pipeline.run_turn(session, audio, cfg)
                session_append(session, turn)
        except Exception as exc:
            return _map_error(exc)
        return turn.to_dict()

    @app.get("/api/characters")
    async def api_characters():
        return [
            {"id": c.id, "display_name": c.display_name, "language": c.language.value}
            for c in pipeline.characters.all()
        ]

    @app.get("/api/melodies")
    async def api_melodies():
        if pipeline.melodies is None:
            return []
        out = []
        for mid, melody in pipeline.melodies.entries.items():
            out.append(
                {
                    "id": mid,
                    "notes": len(melody.notes),
                    "phrases": len(melody.phrases) if melody.phrases else 0,
                    "annotated": melody.source_groups is not None,
                }
            )
        return out

    @app.get("/api/backends")
    async def api_backends():
        return {
            kind.value: pipeline.backends.names(kind)
            for kind in BackendKind
        }

    @app.post("/api/eval")
    def api_eval(payload: dict[str, Any]):
        raw_items = payload.get("items")
        if not raw_items or not isinstance(raw_items, list):
            return JSONResponse(
                status_code=400, content=_error_body("config", "items must be non-empty", fld="items")
            )
        try:
            cfg = PipelineConfig.from_dict(payload.get("config") or {}, base=base_cfg)
            items = []
            for i, raw in enumerate(raw_items):
                items.append(
                    EvalItem(
                        id=str(raw.get("id", i)),
                        audio=from_wav_b64(raw["audio_b64"]),
                        ref_text=raw.get("ref_text"),
                    )
                )
        except KeyError as exc:
            return JSONResponse(
                status_code=400, content=_error_body("config", f"item missing {exc}", fld="items")
            )
        except CroonError as exc:
            return _map_error(exc)
        report = run_eval(items, cfg, pipeline=pipeline, jobs=int(payload.get("jobs", 1)))
        return report.to_dict()

    @app.get("/healthz")
    async def healthz():
        probes: dict[str, str] = {}
        for label, spec in (
            ("asr", base_cfg.asr),
            ("llm", base_cfg.llm),
            ("svs", base_cfg.svs),
            ("scorer", base_cfg.scorer),
        ):
            probes[label] = await _probe(spec)
        status = "ok" if all(v in ("ok", "disabled") for v in probes.values()) else "degraded"
        return {"status": status, "backends": probes}

    return app


async def _probe(spec: BackendSpec | None) -> str:
    """Shallow reachability: any HTTP response at all counts as reachable."""
    if spec is None:
        return "disabled"
    if not spec.endpoint:
        return "ok"  # built-in backend
    try:
        async with httpx.AsyncClient(timeout=2.0) as client:
            await client.get(spec.endpoint)
        return "ok"
    except httpx.HTTPError:
        return "unreachable"


def serve(config: ServiceConfig, host: str = "127.0.0.1"):
    """Run the service under uvicorn; in-flight turns drain on shutdown."""
    import uvicorn

    uvicorn.run(create_app(config), host=host, port=config.port, log_level="info")
