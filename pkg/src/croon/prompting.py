"""Persona prompt construction and the character registry.

The system prompt is the persona text verbatim, followed by the phrase
constraint block when one applies; the user prompt is the transcript.
Two characters ship as package data and load at registry construction.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .alignment import PhraseConstraints
from .errors import ConfigError, ConflictError, NotFoundError, ParameterError
from .score import Language

ZH_CONSTRAINT_HEADER = "请按照歌词格式回复，每句需遵循以下字数规则："
ZH_CONSTRAINT_LINE = "第{n}句：{k}个字"
ZH_CONSTRAINT_FOOTER = "如果没有足够的信息回答，请使用最少的句子，不要重复、不要扩展、不要加入无关内容。"

JA_CONSTRAINT_HEADER = "歌詞の形式で返答してください。各行は以下のかな数の規則に従ってください："
JA_CONSTRAINT_LINE = "第{n}行：{k}かな"
JA_CONSTRAINT_FOOTER = "十分な情報がない場合は、できるだけ少ない行数で答えてください。繰り返しや引き延ばし、無関係な内容は加えないでください。"


@dataclass(frozen=True)
class VoiceSpec:
    """Speaker identity: exactly one of id or embedding."""

    speaker_id: str | None = None
    embedding: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.speaker_id is None) == (self.embedding is None):
            raise ParameterError("set exactly one of speaker_id or embedding")


@dataclass(frozen=True)
class Character:
    id: str
    display_name: str
    persona_prompt: str
    language: Language
    voice: VoiceSpec


@dataclass(frozen=True)
class PromptBundle:
    system: str
    user: str


def build_phrase_constraint_text(pc: PhraseConstraints, language: Language) -> str:
    """Render the per-phrase syllable budget block for the system prompt."""
    if language == Language.ZH:
        header, line, footer = ZH_CONSTRAINT_HEADER, ZH_CONSTRAINT_LINE, ZH_CONSTRAINT_FOOTER
    else:
        header, line, footer = JA_CONSTRAINT_HEADER, JA_CONSTRAINT_LINE, JA_CONSTRAINT_FOOTER
    lines = [header]
    lines.extend(line.format(n=i + 1, k=k) for i, k in enumerate(pc.counts))
    lines.append(footer)
    return "\n".join(lines)


def build_prompt(
    character: Character,
    pc: PhraseConstraints | None,
    transcript: str,
    history: list[tuple[str, str]] | None = None,
) -> PromptBundle:
    """Compose system and user prompts; history rides separately to the
    backend as alternating prior turns."""
    if not transcript:
        raise ParameterError("transcript must be non-empty")
    system = character.persona_prompt
    if pc is not None:
        system = system + "\n\n" + build_phrase_constraint_text(pc, character.language)
    return PromptBundle(system=system, user=transcript)


class CharacterRegistry:
    """Characters by id; registration is serialized, reads are free."""

    def __init__(self):
        self._entries: dict[str, Character] = {}

    def register(self, config: dict[str, Any]) -> Character:
        required = ("id", "display_name", "persona_prompt", "language", "voice")
        for name in required:
            if name not in config or config[name] in (None, ""):
                raise ConfigError(f"character config missing field '{name}'")
        cid = str(config["id"])
        if cid in self._entries:
            raise ConflictError(f"character id '{cid}' already registered")
        voice_cfg = config["voice"]
        if "speaker_id" in voice_cfg:
            voice = VoiceSpec(speaker_id=str(voice_cfg["speaker_id"]))
        elif "embedding" in voice_cfg:
            voice = VoiceSpec(embedding=tuple(float(x) for x in voice_cfg["embedding"]))
        else:
            raise ConfigError("character voice needs speaker_id or embedding")
        character = Character(
            id=cid,
            display_name=str(config["display_name"]),
            persona_prompt=str(config["persona_prompt"]),
            language=Language(config["language"]),
            voice=voice,
        )
        self._entries[cid] = character
        return character

    def register_file(self, path: str | Path) -> Character:
        with open(path, encoding="utf-8") as f:
            return self.register(yaml.safe_load(f))

    def get(self, character_id: str) -> Character:
        try:
            return self._entries[character_id]
        except KeyError:
            raise NotFoundError(f"unknown character id '{character_id}'") from None

    def ids(self) -> list[str]:
        return list(self._entries)

    def all(self) -> list[Character]:
        return list(self._entries.values())

    def __len__(self) -> int:
        return len(self._entries)


def builtin_characters() -> CharacterRegistry:
    """Registry preloaded with the two shipped personas."""
    registry = CharacterRegistry()
    root = importlib.resources.files("croon") / "characters"
    for name in sorted(p.name for p in root.iterdir() if p.name.endswith(".yaml")):
        registry.register(yaml.safe_load((root / name).read_text(encoding="utf-8")))
    return registry
