from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cgec.core import DataError, ParseError
from cgec.lexicons import (
    FrequencyTable,
    PhoneticLexicon,
    SemClassDict,
    Syllable,
    build_frequency_table,
    is_maskable,
    load_phonetic_lexicon,
    load_pos_lexicon,
    load_semclass_dict,
    lookup_semclass,
    sim_set,
)


def lex_of(entries):
    return PhoneticLexicon({ch: {Syllable.parse(s) for s in sylls.split(",")} for ch, sylls in entries.items()})


def test_tone_insensitive_by_default():
    lex = lex_of({"金": "jin1", "今": "jin1", "进": "jin4", "年": "nian2"})
    assert sim_set(lex, "金") == {"今", "进"}
    assert sim_set(lex, "金", tone_sensitive=True) == {"今"}


def test_polyphones_take_the_union():
    lex = lex_of({"长": "chang2,zhang3", "常": "chang2", "张": "zhang1"})
    assert sim_set(lex, "长") == {"常", "张"}
    assert sim_set(lex, "常") == {"长"}


def test_unknown_character_has_no_homophones():
    assert sim_set(lex_of({"金": "jin1"}), "x") == set()


def test_bundled_pair(lexicons):
    assert "今" in lexicons.phonetic.sim_set("金")


def test_sim_set_is_symmetric_and_irreflexive(lexicons):
    lex = lexicons.phonetic
    for ch in lex.readings:
        others = lex.sim_set(ch)
        assert ch not in others
        for o in others:
            assert ch in lex.sim_set(o)


def test_parse_errors_name_the_line(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("金\tjin1\n今 jin1\n", encoding="utf-8")
    with pytest.raises(ParseError, match=":2:"):
        load_phonetic_lexicon(p)
    p.write_text("金\tjin9\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_phonetic_lexicon(p)


def test_duplicate_lines_merge(tmp_path):
    p = tmp_path / "p.tsv"
    p.write_text("长\tchang2\n长\tzhang3\n张\tzhang1\n", encoding="utf-8")
    assert load_phonetic_lexicon(p).sim_set("长") == {"张"}


def test_maskability_threshold_is_strict():
    ft = FrequencyTable(Counter({"的": 10, "金": 3}))
    assert is_maskable(ft, "金", 3)
    assert not is_maskable(ft, "金", 2)
    assert not is_maskable(ft, "的", 9)
    assert not is_maskable(ft, "。", 10**9)
    assert is_maskable(ft, "新", 0)


@given(st.integers(0, 20), st.integers(0, 20))
def test_maskability_is_monotone_in_k(k, extra):
    ft = FrequencyTable(Counter({"金": 7}))
    if is_maskable(ft, "金", k):
        assert is_maskable(ft, "金", k + extra)


def test_frequency_table_round_trip(tmp_path):
    ft = build_frequency_table([list("今天天气"), ["天", "[MASK]"]])
    assert ft.count("天") == 3 and ft.total() == 5
    ft.save(tmp_path / "f.tsv")
    assert FrequencyTable.load(tmp_path / "f.tsv") == ft


def test_frequency_table_rejects_bad_counts(tmp_path):
    p = tmp_path / "f.tsv"
    p.write_text("金\t-1\n", encoding="utf-8")
    with pytest.raises(ParseError):
        FrequencyTable.load(p)


def test_pos_lexicon(tmp_path):
    p = tmp_path / "pos.tsv"
    p.write_text("老师\tnoun\n好\tadjective\n", encoding="utf-8")
    lex = load_pos_lexicon(p)
    assert lex.max_word_len == 2 and lex.char_tags == {"好": "adjective"}
    p.write_text("老师\tteacher\n", encoding="utf-8")
    with pytest.raises(ParseError):
        load_pos_lexicon(p)


def test_semclass_tree_property():
    d = SemClassDict({"老师": ("A", "Ae", "Ae13")})
    with pytest.raises(DataError):
        d.add("学生", ("B", "Ae", "Ae14"))


def test_semclass_lookup_pads_and_truncates(tmp_path):
    p = tmp_path / "s.tsv"
    p.write_text("老师\tA/Ae/Ae13\n东西\tB/Ba\n", encoding="utf-8")
    d = load_semclass_dict(p)
    assert lookup_semclass(d, "老师", 2).levels == ("A", "Ae")
    assert lookup_semclass(d, "东西", 3).levels == ("B", "Ba", "-")
    assert lookup_semclass(d, "的", 3).levels == ("-", "-", "-")
    assert d.level_codes(2) == ["Ae", "Ba"]


def test_bundled_resources_are_consistent(lexicons):
    for word in lexicons.pos.words:
        for ch in word:
            if not ch.isascii() and ch not in "。，？！":
                assert ch in lexicons.phonetic, ch
