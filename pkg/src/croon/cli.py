"""Command-line interface: serve, chat, synth, align, parse-midi,
gen-melody, eval.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every command
accepts --config plus flag overrides (flags win), and the effective
config is echoed into whatever artifacts the command writes. With stub
backends and a fixed --seed, all commands are deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import audio as audio_mod
from .alignment import align_lyric_aware, align_one_to_one
from .backends import BackendKind, svs_synthesize
from .errors import CroonError, ParameterError
from .evaluate import EvalItem, run_eval
from .lyrics import FallbackG2P, g2p, normalize_lyrics
from .melody import (
    RandomMelodyParams,
    WindowRequest,
    generate_random_melody,
    load_dataset,
    sample_window,
    select_main_melody,
)
from .midi import parse_midi
from .pipeline import Pipeline, PipelineConfig, Session, attach_phonemes, session_append
from .report import write_report
from .score import melody_to_dict, score_to_dict
from .service import ServiceConfig, serve


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this CLI reserves 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_pipeline_config(args) -> PipelineConfig:
    data: dict = {}
    if getattr(args, "config", None):
        data = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
    overrides: dict = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "language", None):
        overrides["language"] = args.language
    if getattr(args, "character", None):
        overrides["character_id"] = args.character
    if getattr(args, "strategy", None):
        overrides["alignment_strategy"] = args.strategy
    cfg = PipelineConfig.from_dict(data)
    return PipelineConfig.from_dict(overrides, base=cfg)


def _make_pipeline(args, cfg: PipelineConfig) -> Pipeline:
    melodies = None
    if getattr(args, "dataset", None):
        melodies = load_dataset(args.dataset, args.dataset_format)
    pipeline = Pipeline(melodies=melodies)
    asr_map = getattr(args, "asr_map", None)
    if asr_map:
        mapping = json.loads(Path(asr_map).read_text(encoding="utf-8"))
        from .backends.stubs import StubAsr

        pipeline.backends.register_instance(BackendKind.ASR, "stub", StubAsr(mapping))
    return pipeline


def _add_common(p: argparse.ArgumentParser, dataset: bool = False):
    p.add_argument("--config", help="YAML pipeline config file")
    p.add_argument("--seed", type=int, help="seed for all deterministic choices")
    p.add_argument("--language", choices=["zh", "ja"], help="pipeline language")
    if dataset:
        p.add_argument("--dataset", help="melody dataset path")
        p.add_argument(
            "--dataset-format",
            choices=["score_json", "midi_dir"],
            default="score_json",
            help="melody dataset format",
        )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="croon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service", parents=[], add_help=True)
    p.add_argument("--config", help="YAML service config file")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="override configured port")

    p = sub.add_parser("chat", help="run dialogue turns from WAV input(s)")
    _add_common(p, dataset=True)
    p.add_argument("--audio", required=True, help="input WAV file or directory of WAVs")
    p.add_argument("--out-dir", required=True, help="directory for turn artifacts")
    p.add_argument("--character", help="character id")
    p.add_argument("--strategy", choices=["forced_random", "pitch_based", "lyric_aware"])
    p.add_argument("--session-file", help="JSON session file to resume and update")
    p.add_argument("--asr-map", help="JSON digest->transcript map for the stub ASR")
    p.add_argument(
        "--jobs",
        type=int,
        default=1,
        help="batch parallelism; >1 runs each input as an independent session",
    )

    p = sub.add_parser("synth", help="synthesize lyrics onto a melody, no dialogue")
    _add_common(p, dataset=True)
    p.add_argument("--lyrics", required=True, help="UTF-8 lyrics text file")
    p.add_argument("--melody", default="random", help="'random' or a dataset melody id")
    p.add_argument("--strategy", choices=["forced_random", "pitch_based", "lyric_aware"])
    p.add_argument("--out", required=True, help="output WAV path (score JSON lands next to it)")

    p = sub.add_parser("align", help="align lyrics to a melody, print the score")
    _add_common(p, dataset=True)
    p.add_argument("--lyrics", required=True, help="UTF-8 lyrics text file")
    p.add_argument("--melody-id", required=True, help="dataset melody id")
    p.add_argument(
        "--strategy", required=True, choices=["pitch_based", "lyric_aware"], help="alignment strategy"
    )
    p.add_argument("--out", help="write score JSON here instead of stdout")

    p = sub.add_parser("parse-midi", help="parse an SMF file to melody JSON")
    p.add_argument("midi", help="input .mid file")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.add_argument("--main", action="store_true", help="emit only the main melody")

    p = sub.add_parser("gen-melody", help="generate a seeded random melody")
    p.add_argument("--config", help="YAML pipeline config supplying melody_source defaults")
    p.add_argument("--n-notes", type=int, required=True)
    p.add_argument("--pitch-low", type=int, default=None)
    p.add_argument("--pitch-high", type=int, default=None)
    p.add_argument("--dur-low", type=float, default=None)
    p.add_argument("--dur-high", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("eval", help="run the evaluation harness")
    _add_common(p, dataset=True)
    p.add_argument("--items", required=True, help="JSON manifest of evaluation items")
    p.add_argument("--out-dir", required=True, help="directory for report files")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--character", help="character id")
    p.add_argument("--strategy", choices=["forced_random", "pitch_based", "lyric_aware"])

    return parser


def _cmd_serve(args) -> int:
    config = ServiceConfig.load(args.config) if args.config else ServiceConfig()
    if args.port:
        config.port = args.port
    serve(config, host=args.host)
    return 0


def _cmd_chat(args) -> int:
    cfg = _load_pipeline_config(args)
    pipeline = _make_pipeline(args, cfg)
    audio_path = Path(args.audio)
    inputs = sorted(audio_path.glob("*.wav")) if audio_path.is_dir() else [audio_path]
    if not inputs:
        raise ParameterError(f"no WAV files under {audio_path}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def write_turn(wav: Path, turn) -> None:
        stem = out_dir / wav.stem
        Path(f"{stem}.turn.json").write_text(turn.to_json(), encoding="utf-8")
        audio_mod.write_wav(f"{stem}.sung.wav", turn.audio)
        print(f"{wav.name}: '{turn.transcript}' -> {len(turn.score.entries)} notes sung")

    if args.jobs > 1:
        # dataset-creation mode: independent sessions, no shared history
        from concurrent.futures import ThreadPoolExecutor

        def one(wav: Path):
            return pipeline.run_turn(Session(id=wav.stem), audio_mod.read_wav(wav), cfg)

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for wav, turn in zip(inputs, pool.map(one, inputs)):
                write_turn(wav, turn)
        return 0

    session = Session(id="cli")
    if args.session_file and Path(args.session_file).exists():
        session = Session.load(args.session_file)
    for wav in inputs:
        turn = pipeline.run_turn(session, audio_mod.read_wav(wav), cfg)
        session_append(session, turn)
        write_turn(wav, turn)
    if args.session_file:
        session.save(args.session_file)
    return 0


def _read_lyric_lines(args, cfg: PipelineConfig):
    text = Path(args.lyrics).read_text(encoding="utf-8")
    return normalize_lyrics(text, cfg.language)


def _cmd_synth(args) -> int:
    cfg = _load_pipeline_config(args)
    pipeline = _make_pipeline(args, cfg)
    lines = _read_lyric_lines(args, cfg)
    phonemized = g2p(lines, cfg.language, FallbackG2P())

    strategy = args.strategy or cfg.alignment_strategy
    if args.melody == "random":
        melody = generate_random_melody(
            cfg.melody_source.random_params(lines.total_syllables(), cfg.seed)
        )
        score = align_one_to_one(lines.flat_syllables(), melody)
    else:
        if pipeline.melodies is None:
            raise ParameterError("--dataset is required when --melody is not 'random'")
        base = pipeline.melodies.get(args.melody)
        if strategy == "lyric_aware":
            window = sample_window(
                base, WindowRequest(whole_phrases=len(lines.lines)), cfg.seed
            )
            score = align_lyric_aware([list(l.syllables) for l in lines.lines], window)
        else:
            window = sample_window(
                base, WindowRequest(n_notes=lines.total_syllables()), cfg.seed
            )
            score = align_one_to_one(lines.flat_syllables(), window)

    score = attach_phonemes(score, lines, phonemized)
    svs = pipeline.backends.resolve(cfg.svs)
    character = pipeline.characters.get(cfg.character_id)
    audio = svs_synthesize(score, character.voice, svs).audio

    out = Path(args.out)
    audio_mod.write_wav(out, audio)
    sidecar = out.with_suffix(".score.json")
    sidecar.write_text(
        json.dumps(
            {"score": score_to_dict(score), "config": cfg.to_dict()},
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        ),
        encoding="utf-8",
    )
    print(f"wrote {out} and {sidecar}")
    return 0


def _cmd_align(args) -> int:
    cfg = _load_pipeline_config(args)
    if not args.dataset:
        raise ParameterError("--dataset is required for align")
    melodies = load_dataset(args.dataset, args.dataset_format)
    melody = melodies.get(args.melody_id)
    lines = _read_lyric_lines(args, cfg)
    if args.strategy == "lyric_aware":
        score = align_lyric_aware([list(l.syllables) for l in lines.lines], melody)
    else:
        score = align_one_to_one(lines.flat_syllables(), melody)
    payload = json.dumps(
        {"score": score_to_dict(score), "config": cfg.to_dict()},
        ensure_ascii=False,
        sort_keys=True,
        indent=2,
    )
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(payload)
    return 0


def _cmd_parse_midi(args) -> int:
    data = Path(args.midi).read_bytes()
    melodies = parse_midi(data)
    if args.main:
        payload = {"melodies": [melody_to_dict(select_main_melody(melodies))]}
    else:
        payload = {"melodies": [melody_to_dict(m) for m in melodies]}
    text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({len(payload['melodies'])} melodies)")
    else:
        print(text)
    return 0


def _cmd_gen_melody(args) -> int:
    base = PipelineConfig()
    if args.config:
        data = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        base = PipelineConfig.from_dict(data)
    ms = base.melody_source
    params = RandomMelodyParams(
        n_notes=args.n_notes,
        pitch_low=args.pitch_low if args.pitch_low is not None else ms.pitch_low,
        pitch_high=args.pitch_high if args.pitch_high is not None else ms.pitch_high,
        dur_low_s=args.dur_low if args.dur_low is not None else ms.dur_low_s,
        dur_high_s=args.dur_high if args.dur_high is not None else ms.dur_high_s,
        seed=args.seed if args.seed is not None else base.seed,
    )
    melody = generate_random_melody(params)
    payload = {
        "melody": melody_to_dict(melody),
        "params": {
            "n_notes": params.n_notes,
            "pitch_low": params.pitch_low,
            "pitch_high": params.pitch_high,
            "dur_low_s": params.dur_low_s,
            "dur_high_s": params.dur_high_s,
            "seed": params.seed,
        },
    }
    text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_eval(args) -> int:
    cfg = _load_pipeline_config(args)
    pipeline = _make_pipeline(args, cfg)
    manifest = json.loads(Path(args.items).read_text(encoding="utf-8"))
    raw_items = manifest.get("items", [])
    if not raw_items:
        print("usage: croon eval --items MANIFEST --out-dir DIR", file=sys.stderr)
        print(f"croon eval: error: {args.items} lists no items", file=sys.stderr)
        return 1
    base_dir = Path(args.items).parent
    items = [
        EvalItem(
            id=str(raw.get("id", i)),
            audio=audio_mod.read_wav(base_dir / raw["audio"]),
            ref_text=raw.get("ref_text"),
        )
        for i, raw in enumerate(raw_items)
    ]
    report = run_eval(items, cfg, pipeline=pipeline, jobs=args.jobs)
    paths = write_report(report, args.out_dir, figures=args.figures)
    print(f"wrote {paths['json']}, {paths['csv']}, {paths['txt']}")
    if args.figures:
        print(f"figures under {Path(args.out_dir) / 'figures'}")
    return 0


_COMMANDS = {
    "serve": _cmd_serve,
    "chat": _cmd_chat,
    "synth": _cmd_synth,
    "align": _cmd_align,
    "parse-midi": _cmd_parse_midi,
    "gen-melody": _cmd_gen_melody,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except CroonError as exc:
        print(f"croon {args.command}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"croon {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
