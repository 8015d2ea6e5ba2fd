import math
import random
import struct
from collections import Counter

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from cgec.checkpoint import (
    CheckpointError,
    average_checkpoints,
    average_tensors,
    load_model,
    read_tensors,
    save_model,
    write_tensors,
)
from cgec.core import ConfigError, DataError, PipelineConfig
from cgec.lexicons import FrequencyTable, is_maskable, load_bundled_lexicons
from cgec.synthetic import (
    Grammar,
    SyntheticSpec,
    load_grammar,
    make_synthetic_corpus,
    parse_grammar,
    write_gold_m2,
)
from cgec.eval.m2 import load_m2
from cgec.train import (
    TrainConfig,
    TrainingDiverged,
    build_model,
    make_batches,
    prepare_examples,
    train_loop,
    vocab_for_pairs,
)
from helpers import synthetic_pairs, tiny_setup

LEX = load_bundled_lexicons()


# -- tensor container ------------------------------------------------------------


def test_container_layout(tmp_path):
    path = tmp_path / "t.sqmd"
    write_tensors(path, {"a": np.arange(6, dtype=np.float32).reshape(2, 3)})
    raw = path.read_bytes()
    assert raw[:4] == b"SQMD"
    assert struct.unpack_from("<II", raw, 4) == (1, 1)
    assert struct.unpack_from("<I", raw, 12) == (1,)
    assert raw[16:17] == b"a"
    assert struct.unpack_from("<IQQ", raw, 17) == (2, 2, 3)
    assert np.frombuffer(raw[37:], dtype="<f4").tolist() == [0, 1, 2, 3, 4, 5]


def test_corrupt_files(tmp_path):
    p = tmp_path / "bad.sqmd"
    p.write_bytes(b"NOPE")
    with pytest.raises(CheckpointError):
        read_tensors(p)
    write_tensors(p, {"a": np.ones(10, dtype=np.float32)})
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(CheckpointError, match="truncated"):
        read_tensors(p)
    with pytest.raises(CheckpointError):
        read_tensors(tmp_path / "missing.sqmd")


def test_model_round_trip_is_bit_exact(small_cfg, tmp_path):
    model, tagger, _ = tiny_setup(small_cfg)
    save_model(model, tmp_path / "m.sqmd")
    back = load_model(tmp_path / "m.sqmd")
    assert back.cfg == model.cfg and back.vocab == model.vocab
    assert back.class_alphabets == model.class_alphabets
    for (n, a), (_, b) in zip(model.state_dict().items(), back.state_dict().items()):
        assert torch.equal(a, b), n
    save_model(back, tmp_path / "again.sqmd")
    assert (tmp_path / "m.sqmd").read_bytes() == (tmp_path / "again.sqmd").read_bytes()


# -- averaging -------------------------------------------------------------------


def _write(path, **arrays):
    write_tensors(path, {"model." + k: np.asarray(v, dtype=np.float32) for k, v in arrays.items()})
    return path


def test_average_identity_and_symmetry(tmp_path):
    x = np.random.default_rng(0).normal(size=(3, 4)).astype(np.float32)
    one = _write(tmp_path / "a", w=x)
    neg = _write(tmp_path / "b", w=-x)
    assert np.array_equal(average_tensors([one])["model.w"], x)
    assert np.array_equal(average_tensors([one, neg])["model.w"], np.zeros_like(x))


def test_average_of_constants(tmp_path):
    paths = [_write(tmp_path / f"c{c}", w=np.full(5, c)) for c in (1, 2, 3, 4, 10)]
    assert np.allclose(average_tensors(paths)["model.w"], 4.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_average_is_permutation_invariant(tmp_path_factory, seed):
    rng = np.random.default_rng(seed)
    d = tmp_path_factory.mktemp("avg")
    paths = [_write(d / f"p{i}", w=rng.normal(size=7) * 10.0 ** rng.integers(-3, 4)) for i in range(5)]
    base = average_tensors(paths)["model.w"]
    perm = list(paths)
    random.Random(seed).shuffle(perm)
    assert np.array_equal(average_tensors(perm)["model.w"], base)


def test_average_errors_name_the_tensor(tmp_path):
    a = _write(tmp_path / "a", w=np.zeros(3))
    b = _write(tmp_path / "b", w=np.zeros(4))
    with pytest.raises(CheckpointError, match="model.w"):
        average_tensors([a, b])
    c = _write(tmp_path / "c", v=np.zeros(3))
    with pytest.raises(CheckpointError, match="model.w"):
        average_tensors([a, c])
    with pytest.raises(CheckpointError):
        average_tensors([])


def test_average_models_equals_element_wise_mean(small_cfg, tmp_path):
    model, _, _ = tiny_setup(small_cfg)
    paths = []
    states = []
    for i in range(3):
        with torch.no_grad():
            for p in model.parameters():
                p.add_(0.1 * (i + 1))
        save_model(model, tmp_path / f"m{i}.sqmd")
        paths.append(tmp_path / f"m{i}.sqmd")
        states.append({k: v.clone() for k, v in model.state_dict().items()})
    avg = average_checkpoints(paths)
    for k, v in avg.state_dict().items():
        want = torch.stack([s[k].double() for s in states]).mean(0).float()
        assert torch.allclose(v, want, atol=1e-6), k


# -- training --------------------------------------------------------------------


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(lr=0)
    with pytest.raises(ConfigError):
        TrainConfig(average_last=0)


def test_batches_respect_the_token_budget(small_cfg):
    model, tagger, _ = tiny_setup(small_cfg)
    pairs = [(p.source, p.target) for p in synthetic_pairs(30, 1)]
    examples = prepare_examples(model, tagger, pairs)
    batches = make_batches(examples, 100, random.Random(0))
    assert sorted(id(e) for b in batches for e in b) == sorted(id(e) for e in examples)
    for b in batches:
        widest = max(len(e.source) + len(e.target) + 1 for e in b)
        assert len(b) == 1 or widest * len(b) <= 100


def test_empty_corpus_rejected(small_cfg, tagger):
    model = build_model(small_cfg, vocab_for_pairs([("a", "a")]), tagger)
    with pytest.raises(ConfigError):
        train_loop(model, tagger, [])


def test_training_is_deterministic_and_logs(small_cfg, tmp_path):
    pairs = [(p.source, p.target) for p in synthetic_pairs(8, 2, deletion_rate=0.2)]
    outs = []
    for run in ("a", "b"):
        model, tagger, _ = tiny_setup(small_cfg.replace(dropout=0.1))
        model = build_model(model.cfg, vocab_for_pairs(pairs), tagger)
        res = train_loop(model, tagger, pairs, TrainConfig(max_epochs=3, warmup=2), tmp_path / run)
        outs.append(res)
    assert [p.name for p in outs[0].checkpoints] == ["checkpoint0001.sqmd", "checkpoint0002.sqmd", "checkpoint0003.sqmd"]
    for a, b in zip(outs[0].checkpoints, outs[1].checkpoints):
        assert a.read_bytes() == b.read_bytes()
    log = (tmp_path / "a" / "train_log.tsv").read_text().splitlines()
    assert log[0].split("\t") == ["epoch", "loss", "token_loss", "aux_loss", "dev_exact_match"]
    assert len(log) == 4
    assert outs[0].log[-1]["loss"] <= outs[0].log[0]["loss"]


def test_divergence_aborts(small_cfg):
    model, tagger, _ = tiny_setup(small_cfg)
    with torch.no_grad():
        model.token_head.bias.fill_(math.nan)
    pairs = [(p.source, p.target) for p in synthetic_pairs(3)]
    with pytest.raises(TrainingDiverged, match="epoch 1"):
        train_loop(model, tagger, pairs, TrainConfig(max_epochs=1))


# -- synthetic corpus ------------------------------------------------------------


def test_zero_rates_give_identity():
    for p in make_synthetic_corpus(SyntheticSpec(load_grammar(), size=50), LEX.phonetic, LEX.pos):
        assert p.source == p.target and len(p.edits) == 0


def test_full_substitution_hits_every_candidate_position():
    spec = SyntheticSpec(load_grammar(), size=50, substitution_rate=1.0, seed=4)
    for p in make_synthetic_corpus(spec, LEX.phonetic, LEX.pos):
        assert len(p.source) == len(p.target)
        for s, t in zip(p.source, p.target):
            if LEX.phonetic.sim_set(t) and t not in "。，？！":
                assert s != t and s in LEX.phonetic.sim_set(t)
            else:
                assert s == t


def test_substitutions_respect_maskability():
    ft = FrequencyTable(Counter({"我": 100, "你": 100}))
    spec = SyntheticSpec(load_grammar(), size=50, substitution_rate=1.0, seed=5)
    for p in make_synthetic_corpus(spec, LEX.phonetic, LEX.pos, ft, 10):
        for s, t in zip(p.source, p.target):
            if s != t:
                assert is_maskable(ft, t, 10)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000))
def test_gold_edits_round_trip(seed):
    spec = SyntheticSpec(load_grammar(), size=100, seed=seed, substitution_rate=0.15, deletion_rate=0.1,
                         insertion_rate=0.1, word_order_rate=0.1)
    for p in make_synthetic_corpus(spec, LEX.phonetic, LEX.pos):
        assert p.edits.apply(p.source) == p.target
        assert len(p.types) == len(p.edits)


def test_gold_file_round_trip(tmp_path):
    pairs = synthetic_pairs(20, 3, substitution_rate=0.2, insertion_rate=0.2)
    write_gold_m2(pairs, tmp_path / "g.m2")
    back = load_m2(tmp_path / "g.m2")
    assert [s.source for s in back] == [p.source for p in pairs]
    assert [s.annotations[0] for s in back] == [p.edits for p in pairs]


def test_grammar_errors():
    with pytest.raises(DataError):
        SyntheticSpec(load_grammar(), deletion_rate=1.5)
    with pytest.raises(DataError):
        SyntheticSpec(Grammar([]))
    g = parse_grammar("[slots]\nx = 老师 火星人\n[templates]\n{x} 好 。\n")
    with pytest.raises(DataError, match="火星人"):
        make_synthetic_corpus(SyntheticSpec(g), LEX.phonetic, LEX.pos)
    g = parse_grammar("[templates]\n{y} 好 。\n")
    with pytest.raises(DataError):
        make_synthetic_corpus(SyntheticSpec(g), LEX.phonetic, LEX.pos)
