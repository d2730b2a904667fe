from __future__ import annotations

import unicodedata

import pytest

from croon.errors import BackendError, EmptyLyricsError, ParameterError, UnsupportedInputError
from croon.lyrics import (
    FallbackG2P,
    count_syllables,
    g2p,
    normalize_lyrics,
    split_morae,
)
from croon.score import Language


def han_by_name(ch: str) -> bool:
    """Independent Han classifier via Unicode character names."""
    try:
        return unicodedata.name(ch).startswith("CJK UNIFIED IDEOGRAPH") or unicodedata.name(
            ch
        ).startswith("CJK COMPATIBILITY IDEOGRAPH")
    except ValueError:
        return False


class TestNormalize:
    def test_split_on_cjk_punctuation(self):
        lines = normalize_lyrics("你好。很高兴见到你！", Language.ZH)
        assert [l.raw for l in lines.lines] == ["你好", "很高兴见到你"]

    def test_parenthetical_removed(self):
        lines = normalize_lyrics("（微笑）你好", Language.ZH)
        assert [l.raw for l in lines.lines] == ["你好"]

    def test_asterisk_annotation_removed(self):
        lines = normalize_lyrics("*点头* 你好呀", Language.ZH)
        assert [l.raw for l in lines.lines] == ["你好呀"]

    def test_punctuation_only_is_error(self):
        with pytest.raises(EmptyLyricsError):
            normalize_lyrics("!!!", Language.ZH)

    def test_empty_text_is_precondition(self):
        with pytest.raises(ParameterError):
            normalize_lyrics("   ", Language.ZH)

    def test_newlines_split(self):
        lines = normalize_lyrics("山高\n水长", Language.ZH)
        assert len(lines.lines) == 2

    def test_idempotent(self):
        for text in ("你好。很高兴见到你！", "（笑）唱一首歌，给你听\n好不好呀", "山高水长"):
            once = normalize_lyrics(text, Language.ZH)
            twice = normalize_lyrics(once.joined(), Language.ZH)
            assert twice == once

    def test_ascii_punctuation_split(self):
        lines = normalize_lyrics("hello, 你好. 再见!", Language.ZH)
        assert [l.raw for l in lines.lines] == ["hello", "你好", "再见"]


class TestCountSyllables:
    def test_zh_six_han(self):
        assert count_syllables("很高兴见到你", Language.ZH) == 6

    def test_zh_ignores_non_han(self):
        assert count_syllables("ok你好123", Language.ZH) == 2

    def test_zh_matches_bruteforce_classifier(self):
        samples = ["很高兴见到你", "ok你好123", "歌声随风起", "ABCあdeふ漢字x", "，。！"]
        for text in samples:
            assert count_syllables(text, Language.ZH) == sum(1 for ch in text if han_by_name(ch))

    def test_ja_small_yayuyo_merges(self):
        # きょ merges, う stands alone
        assert count_syllables("きょう", Language.JA) == 2

    def test_ja_tokyo_four_morae(self):
        assert count_syllables("とうきょう", Language.JA) == 4

    def test_ja_sokuon_and_n_count_one(self):
        # っ and ん are each one mora: に/っ/ぽ/ん
        assert count_syllables("にっぽん", Language.JA) == 4

    def test_ja_long_vowel_mark(self):
        # ラーメン: ラ/ー/メ/ン
        assert count_syllables("ラーメン", Language.JA) == 4

    def test_ja_katakana_merge(self):
        # キャ merges: キャ/ン/プ
        assert count_syllables("キャンプ", Language.JA) == 3

    def test_ja_kanji_without_backend_errors(self):
        with pytest.raises(UnsupportedInputError):
            count_syllables("東京", Language.JA)

    def test_ja_kanji_with_backend(self):
        class FixedKana:
            def to_kana(self, text):
                return text.replace("東京", "とうきょう")

        assert count_syllables("東京へ", Language.JA, FixedKana()) == 5

    def test_mora_oracle_table(self):
        # mora counts for common words, checked against a published table
        table = {
            "さくら": 3,
            "がっこう": 4,  # が/っ/こ/う
            "しんぶん": 4,  # し/ん/ぶ/ん
            "ちょっと": 3,  # ちょ/っ/と
            "びょういん": 4,  # びょ/う/い/ん
        }
        for word, count in table.items():
            assert count_syllables(word, Language.JA) == count, word


class TestG2P:
    def test_fallback_identity(self):
        lines = normalize_lyrics("你好", Language.ZH)
        ph = g2p(lines, Language.ZH, FallbackG2P())
        assert ph.lines == ((("你",), ("好",)),)

    def test_syllable_count_contract_enforced(self):
        class Broken:
            name = "broken"

            def phonemize(self, syllables, language):
                return [["x"]]  # wrong arity

        lines = normalize_lyrics("你好", Language.ZH)
        with pytest.raises(BackendError):
            g2p(lines, Language.ZH, Broken())

    def test_empty_phoneme_list_rejected(self):
        class Empty:
            name = "empty"

            def phonemize(self, syllables, language):
                return [[] for _ in syllables]

        lines = normalize_lyrics("你好", Language.ZH)
        with pytest.raises(BackendError):
            g2p(lines, Language.ZH, Empty())

    def test_backend_exception_wrapped(self):
        class Boom:
            name = "boom"

            def phonemize(self, syllables, language):
                raise RuntimeError("lexicon offline")

        lines = normalize_lyrics("你好", Language.ZH)
        with pytest.raises(BackendError) as err:
            g2p(lines, Language.ZH, Boom())
        assert "lexicon offline" in str(err.value)

    def test_pinyin_style_backend_golden(self):
        # a fixed lexicon backend standing in for a real pinyin G2P
        lexicon = {"你": ["n", "i3"], "好": ["h", "ao3"]}

        class Pinyin:
            name = "pinyin"

            def phonemize(self, syllables, language):
                return [lexicon[s] for s in syllables]

        lines = normalize_lyrics("你好", Language.ZH)
        ph = g2p(lines, Language.ZH, Pinyin())
        assert ph.lines == ((("n", "i3"), ("h", "ao3")),)

    def test_count_preserved_for_every_backend(self):
        lines = normalize_lyrics("歌声随风起。月光落心间", Language.ZH)
        for backend in (FallbackG2P(),):
            ph = g2p(lines, Language.ZH, backend)
            assert [len(line) for line in ph.lines] == lines.syllable_counts()


def test_split_morae_ignores_non_kana():
    assert split_morae("さ…く！ら") == ["さ", "く", "ら"]
