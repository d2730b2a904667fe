"""Automatic metrics: phoneme error rate, large jump ratio, latency per
token, and the batch harness that rolls them into a report.

PER compares phoneme hypotheses from re-recognizing the sung output
against the normalized lyric reference under the same G2P, so values are
comparable only within one G2P choice. Jump ratio is computed over the
aligned melody's pitches. Latency normalization divides stage seconds by
the syllable count of the input transcript.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

from . import audio as audio_mod
from .audio import RECOGNITION_RATE, AudioBuffer
from .backends import asr_transcribe, score_quality
from .errors import ParameterError
from .lyrics import g2p, normalize_lyrics
from .pipeline import Pipeline, PipelineConfig, Session, TurnResult

logger = logging.getLogger(__name__)

JUMP_SEMITONES = 5


def per(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """Phoneme error rate: unit-cost edit distance over |ref|.

    May exceed 1.0 when the hypothesis is much longer than the
    reference.
    """
    if not ref:
        raise ParameterError("PER reference must be non-empty")
    prev = list(range(len(hyp) + 1))
    for i, r in enumerate(ref, start=1):
        cur = [i] + [0] * len(hyp)
        for j, h in enumerate(hyp, start=1):
            cur[j] = min(
                prev[j] + 1,  # deletion
                cur[j - 1] + 1,  # insertion
                prev[j - 1] + (r != h),  # substitution / match
            )
        prev = cur
    return prev[-1] / len(ref)


def large_jump_ratio(pitches: Sequence[int]) -> float:
    """Fraction of adjacent note pairs more than five semitones apart.

    Defined as 0 for a single note (the denominator vanishes).
    """
    n = len(pitches)
    if n == 0:
        raise ParameterError("need at least one pitch")
    if n == 1:
        return 0.0
    jumps = 0
    prev = pitches[0]
    for p in pitches[1:]:
        if p - prev > JUMP_SEMITONES or prev - p > JUMP_SEMITONES:
            jumps += 1
        prev = p
    return jumps / (n - 1)


def normalized_latency(stage_s: float, n_input_tokens: int) -> float:
    """Seconds per input token."""
    if n_input_tokens < 1:
        raise ParameterError(f"n_input_tokens must be >= 1, got {n_input_tokens}")
    return stage_s / n_input_tokens


@dataclass(frozen=True)
class EvalItem:
    """One evaluation input: audio to run, or a precomputed turn."""

    id: str
    audio: AudioBuffer | None = None
    turn: TurnResult | None = None
    ref_text: str | None = None
    ref_phonemes: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.audio is None) == (self.turn is None):
            raise ParameterError(f"item {self.id}: provide exactly one of audio or turn")


@dataclass
class EvalRow:
    id: str
    per: float | None = None
    jump_ratio: float | None = None
    latencies: dict[str, float] = field(default_factory=dict)
    normalized_latencies: dict[str, float] = field(default_factory=dict)
    quality: float | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "per": self.per,
            "jump_ratio": self.jump_ratio,
            "latencies": dict(self.latencies),
            "normalized_latencies": dict(self.normalized_latencies),
            "quality": self.quality,
            "error": self.error,
        }


@dataclass
class EvalReport:
    rows: list[EvalRow]
    aggregates: dict[str, float]
    failures: int
    config: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "aggregates": dict(self.aggregates),
            "failures": self.failures,
            "config": dict(self.config),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2)


def run_eval(
    items: list[EvalItem],
    cfg: PipelineConfig,
    pipeline: Pipeline | None = None,
    scorer=None,
    jobs: int = 1,
) -> EvalReport:
    """Run each item through the pipeline (or consume its precomputed
    turn), compute metrics, and aggregate. Per-item failures land in the
    row and are excluded from aggregates. Rows keep input order even
    when evaluated in parallel."""
    if not items:
        raise ParameterError("no evaluation items")
    pipeline = pipeline or Pipeline()

    def eval_one(item: EvalItem) -> EvalRow:
        row = EvalRow(id=item.id)
        try:
            if item.turn is not None:
                turn = item.turn
            else:
                session = Session(id=f"eval-{item.id}")
                turn = pipeline.run_turn(session, item.audio, cfg)
            _fill_row(row, item, turn, cfg, pipeline, scorer)
        except Exception as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            logger.warning("eval item %s failed: %s", item.id, row.error)
        return row

    if jobs <= 1:
        rows = [eval_one(item) for item in items]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(eval_one, items))

    ok = [r for r in rows if r.error is None]
    aggregates: dict[str, float] = {}
    if ok:
        pers = [r.per for r in ok if r.per is not None]
        jumps = [r.jump_ratio for r in ok if r.jump_ratio is not None]
        if pers:
            aggregates["per"] = sum(pers) / len(pers)
        if jumps:
            aggregates["jump_ratio"] = sum(jumps) / len(jumps)
        for stage in sorted({s for r in ok for s in r.latencies}):
            vals = [r.latencies[stage] for r in ok if stage in r.latencies]
            aggregates[f"latency_{stage}"] = sum(vals) / len(vals)
            nvals = [
                r.normalized_latencies[stage] for r in ok if stage in r.normalized_latencies
            ]
            if nvals:
                aggregates[f"normalized_latency_{stage}"] = sum(nvals) / len(nvals)
        quals = [r.quality for r in ok if r.quality is not None]
        if quals:
            aggregates["quality"] = sum(quals) / len(quals)
    return EvalReport(
        rows=rows,
        aggregates=aggregates,
        failures=sum(1 for r in rows if r.error is not None),
        config=cfg.to_dict(),
    )


def _fill_row(
    row: EvalRow,
    item: EvalItem,
    turn: TurnResult,
    cfg: PipelineConfig,
    pipeline: Pipeline,
    scorer,
) -> None:
    row.jump_ratio = large_jump_ratio([n.pitch for n in turn.score.all_notes()])
    row.latencies = dict(turn.latencies)

    tokens = _transcript_tokens(turn, cfg, pipeline)
    if tokens >= 1:
        row.normalized_latencies = {
            stage: normalized_latency(s, tokens) for stage, s in turn.latencies.items()
        }

    ref = _reference_phonemes(item, turn, cfg, pipeline)
    if ref:
        hyp = _hypothesis_phonemes(turn, cfg, pipeline)
        row.per = per(ref, hyp)

    if scorer is not None:
        row.quality = score_quality(turn.audio, scorer)


def _transcript_tokens(turn: TurnResult, cfg: PipelineConfig, pipeline: Pipeline) -> int:
    try:
        counted = normalize_lyrics(turn.transcript, cfg.language, pipeline.kana)
        return counted.total_syllables()
    except Exception:
        return 0


def _reference_phonemes(
    item: EvalItem, turn: TurnResult, cfg: PipelineConfig, pipeline: Pipeline
) -> list[str]:
    if item.ref_phonemes is not None:
        return list(item.ref_phonemes)
    backend = pipeline._g2p_backend(cfg)
    if item.ref_text is not None:
        lines = normalize_lyrics(item.ref_text, cfg.language, pipeline.kana)
    else:
        lines = turn.lyric_lines
    return g2p(lines, cfg.language, backend).flat_tokens()


def _hypothesis_phonemes(turn: TurnResult, cfg: PipelineConfig, pipeline: Pipeline) -> list[str]:
    """Re-recognize the sung output at 16 kHz and phonemize it with the
    same G2P as the reference."""
    asr = pipeline.backends.resolve(cfg.asr)
    audio16 = audio_mod.resample(turn.audio, RECOGNITION_RATE)
    text = asr_transcribe(audio16, cfg.language, asr).text
    try:
        lines = normalize_lyrics(text, cfg.language, pipeline.kana)
    except Exception:
        return []
    backend = pipeline._g2p_backend(cfg)
    return g2p(lines, cfg.language, backend).flat_tokens()
