from cgec.core import PipelineConfig
from cgec.lexicons import PosLexicon, SemClassDict
from cgec.tagger import Tagger, feature_sequence, pos_tag, segment_maxmatch

POS = PosLexicon({"老师": "noun", "老": "adjective", "好": "adjective", "你好": "other", "。": "punctuation"},
                 {"老": "adjective", "好": "adjective", "。": "punctuation"})


def test_forward_maximum_matching():
    assert segment_maxmatch(list("老师好"), POS) == ["老师", "好"]
    assert segment_maxmatch(list("你好老"), POS) == ["你好", "老"]
    assert segment_maxmatch(list("他x"), POS) == ["他", "x"]
    assert segment_maxmatch([], POS) == []


def test_tag_fallbacks():
    assert pos_tag(["老师", "老x", "zz"], POS) == ["noun", "adjective", "other"]


def test_features_broadcast_to_characters():
    sem = SemClassDict({"老师": ("A", "Ae", "Ae13")})
    tagger = Tagger(POS, sem, 3)
    f = tagger.features(list("老师好。"))
    assert len(f) == 4
    assert f.word_index == [0, 0, 1, 2] and f.word_start == [True, False, True, True]
    noun = POS.tagset.index("noun")
    assert f.pos[:2] == [noun, noun]
    assert f.classes[0] == f.classes[1] == (1, 1, 1)
    assert f.classes[2] == (0, 0, 0)
    assert tagger.class_alphabets == [["-", "A"], ["-", "Ae"], ["-", "Ae13"]]


def test_tsv_lists_every_character(tagger):
    rows = tagger.tsv(list("我喜欢吃苹果。")).splitlines()
    assert len(rows) == 7 and rows[0].split("\t")[0] == "我"


def test_feature_sequence_matches_tagger(lexicons, tagger, small_cfg):
    seq = list("老师已经知道这个问题了。")
    assert feature_sequence(seq, lexicons, small_cfg) == tagger.features(seq)


def test_class_levels_are_respected(lexicons):
    f = Tagger.from_lexicons(lexicons, PipelineConfig(class_levels=1)).features(list("老师"))
    assert all(len(c) == 1 for c in f.classes)
