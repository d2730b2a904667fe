from __future__ import annotations

from pathlib import Path

import pytest

from croon.alignment import PhraseConstraints
from croon.errors import ConfigError, ConflictError, NotFoundError, ParameterError
from croon.prompting import (
    VoiceSpec,
    build_phrase_constraint_text,
    build_prompt,
    builtin_characters,
)
from croon.score import Language

GOLDEN = Path(__file__).parent / "golden"

ZH_5757_BLOCK = (
    "请按照歌词格式回复，每句需遵循以下字数规则：\n"
    "第1句：5个字\n"
    "第2句：7个字\n"
    "第3句：5个字\n"
    "第4句：7个字\n"
    "如果没有足够的信息回答，请使用最少的句子，不要重复、不要扩展、不要加入无关内容。"
)


class TestConstraintText:
    def test_zh_5757_byte_exact(self):
        got = build_phrase_constraint_text(PhraseConstraints((5, 7, 5, 7)), Language.ZH)
        assert got == ZH_5757_BLOCK

    def test_zh_single_phrase(self):
        got = build_phrase_constraint_text(PhraseConstraints((3,)), Language.ZH)
        lines = got.split("\n")
        assert lines[0] == "请按照歌词格式回复，每句需遵循以下字数规则："
        assert lines[1] == "第1句：3个字"
        assert lines[2].startswith("如果没有足够的信息回答")
        assert len(lines) == 3

    def test_ja_two_lines_golden(self):
        got = build_phrase_constraint_text(PhraseConstraints((2, 2)), Language.JA)
        expected = (GOLDEN / "ja_constraint_2_2.txt").read_text(encoding="utf-8")
        assert got == expected

    def test_deterministic(self):
        pc = PhraseConstraints((5, 7))
        assert build_phrase_constraint_text(pc, Language.ZH) == build_phrase_constraint_text(
            pc, Language.ZH
        )


class TestPersonas:
    def test_two_shipped_characters(self):
        registry = builtin_characters()
        assert sorted(registry.ids()) == ["limei", "yaoyin"]

    @pytest.mark.parametrize("cid", ["limei", "yaoyin"])
    def test_persona_matches_golden(self, cid):
        registry = builtin_characters()
        golden = (GOLDEN / f"{cid}_persona.txt").read_text(encoding="utf-8")
        assert registry.get(cid).persona_prompt == golden


class TestBuildPrompt:
    def test_unconstrained_system_is_persona_exact(self):
        registry = builtin_characters()
        yaoyin = registry.get("yaoyin")
        bundle = build_prompt(yaoyin, None, "你好")
        assert bundle.system == yaoyin.persona_prompt
        assert bundle.user == "你好"

    def test_constraint_block_follows_persona(self):
        registry = builtin_characters()
        limei = registry.get("limei")
        pc = PhraseConstraints((5, 7, 5, 7))
        bundle = build_prompt(limei, pc, "讲个故事")
        assert bundle.system.startswith(limei.persona_prompt)
        assert bundle.system.endswith(ZH_5757_BLOCK)
        assert bundle.system == limei.persona_prompt + "\n\n" + ZH_5757_BLOCK

    def test_empty_transcript_rejected(self):
        registry = builtin_characters()
        with pytest.raises(ParameterError):
            build_prompt(registry.get("limei"), None, "")

    def test_system_pure_function(self):
        registry = builtin_characters()
        limei = registry.get("limei")
        pc = PhraseConstraints((4, 4))
        a = build_prompt(limei, pc, "问题一")
        b = build_prompt(limei, pc, "问题二")
        assert a.system == b.system


class TestRegistry:
    def config(self, cid="xinglan"):
        return {
            "id": cid,
            "display_name": "星澜",
            "persona_prompt": "你是星澜，风语城的守护者。",
            "language": "zh",
            "voice": {"speaker_id": cid},
        }

    def test_register_third_character(self):
        registry = builtin_characters()
        registry.register(self.config())
        assert len(registry) == 3

    def test_duplicate_id_conflict(self):
        registry = builtin_characters()
        with pytest.raises(ConflictError):
            registry.register(self.config(cid="yaoyin"))

    def test_missing_field_names_it(self):
        registry = builtin_characters()
        cfg = self.config()
        del cfg["persona_prompt"]
        with pytest.raises(ConfigError) as err:
            registry.register(cfg)
        assert "persona_prompt" in str(err.value)

    def test_unknown_id(self):
        with pytest.raises(NotFoundError):
            builtin_characters().get("nobody")

    def test_embedding_voice(self):
        registry = builtin_characters()
        cfg = self.config(cid="vec")
        cfg["voice"] = {"embedding": [0.1] * 8}
        c = registry.register(cfg)
        assert len(c.voice.embedding) == 8


def test_voice_spec_exactly_one_variant():
    with pytest.raises(ParameterError):
        VoiceSpec()
    with pytest.raises(ParameterError):
        VoiceSpec(speaker_id="a", embedding=(0.1,))
