"""Command-line entry point: ``cgec <command> [options]``.

Exit status is 0 on success, 1 for bad data or contract violations and 2 for
I/O or environment failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .checkpoint import average_checkpoints, load_model, read_tensors, save_model, write_tensors
from .core import CgecError, PipelineConfig, to_charseq, load_config
from .eval.analysis import analyze_corpus
from .eval.diagnostics import export_transition_matrix, format_neighbors, pos_embedding_neighbors
from .eval.m2 import load_m2, max_match_corpus
from .lexicons import (
    FrequencyTable,
    Lexicons,
    bundled_data_path,
    build_frequency_table,
    load_phonetic_lexicon,
    load_pos_lexicon,
    load_semclass_dict,
)
from .masked_lm import NGramMaskedLM, mlm_from_tensors, mlm_to_tensors, train_ngram_mlm
from .pipeline import Corrector
from .sec import correct_spelling, format_sweep, sweep_threshold
from .synthetic import SyntheticSpec, load_grammar, make_synthetic_corpus, write_gold_m2
from .tagger import Tagger

log = logging.getLogger("cgec")


# -- shared helpers ------------------------------------------------------------


def _read_lines(path) -> list[str]:
    if path in (None, "-"):
        return [line.rstrip("\n") for line in sys.stdin]
    return Path(path).read_text(encoding="utf-8").splitlines()


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    changes = {}
    if getattr(args, "kc", None) is not None:
        changes["k_c"] = args.kc
    if getattr(args, "beam", None) is not None:
        changes["beam_size"] = args.beam
    if args.seed is not None:
        changes["seed"] = args.seed
    return cfg.replace(**changes) if changes else cfg


def _lexicons(args, need_freq: bool = False) -> Lexicons:
    lex = Lexicons(
        phonetic=load_phonetic_lexicon(args.pinyin or bundled_data_path("pinyin.tsv")),
        pos=load_pos_lexicon(args.pos_lex or bundled_data_path("pos.tsv")),
        semclass=load_semclass_dict(args.semclass or bundled_data_path("semclass.tsv")),
    )
    if args.freq:
        lex.freq = FrequencyTable.load(args.freq)
    elif need_freq:
        raise CgecError("--freq is required for this command")
    return lex


def _mlm(path):
    tensors = read_tensors(path)
    if "mlm.meta" not in tensors:
        raise CgecError(f"{path} holds no masked language model")
    return NGramMaskedLM(mlm_from_tensors(tensors))


def _pairs(src_path, tgt_path) -> list[tuple[list[str], list[str]]]:
    src, tgt = _read_lines(src_path), _read_lines(tgt_path)
    if len(src) != len(tgt):
        raise CgecError(f"{len(src)} source lines but {len(tgt)} target lines")
    return [(to_charseq(s), to_charseq(t)) for s, t in zip(src, tgt)]


def _join(seq) -> str:
    return "".join(seq)


# -- commands ------------------------------------------------------------------


def cmd_gen(args) -> None:
    cfg = _config(args)
    lex = _lexicons(args)
    spec = SyntheticSpec(
        load_grammar(args.templates),
        size=args.size,
        substitution_rate=args.sub_rate,
        deletion_rate=args.del_rate,
        insertion_rate=args.ins_rate,
        word_order_rate=args.order_rate,
        tone_sensitive=cfg.tone_sensitive,
        seed=cfg.seed,
    )
    pairs = make_synthetic_corpus(spec, lex.phonetic, lex.pos, lex.freq, cfg.k_c if lex.freq else None)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.src").write_text("".join(_join(p.source) + "\n" for p in pairs), encoding="utf-8")
    Path(f"{out}.tgt").write_text("".join(_join(p.target) + "\n" for p in pairs), encoding="utf-8")
    write_gold_m2(pairs, f"{out}.m2")


def cmd_freq(args) -> None:
    ft = build_frequency_table(to_charseq(line) for line in _read_lines(args.input))
    if args.out:
        ft.save(args.out)
    else:
        for ch, n in sorted(ft.counts.items(), key=lambda kv: (-kv[1], kv[0])):
            sys.stdout.write(f"{ch}\t{n}\n")


def cmd_mlm_train(args) -> None:
    cfg = _config(args)
    corpus = [to_charseq(line) for line in _read_lines(args.input) if line]
    write_tensors(args.out, mlm_to_tensors(train_ngram_mlm(corpus, cfg.mlm_window, cfg.mlm_alpha)))


def cmd_sec(args) -> None:
    cfg = _config(args)
    lex = _lexicons(args, need_freq=True)
    lm = _mlm(args.mlm)
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        for line in _read_lines(args.input):
            out, trace = correct_spelling(to_charseq(line), lm, lex.phonetic, lex.freq, cfg)
            sys.stdout.write(_join(out) + "\n")
            if trace_fh:
                trace_fh.write(json.dumps(trace.to_json(), ensure_ascii=False) + "\n")
    finally:
        if trace_fh:
            trace_fh.close()


def cmd_tag(args) -> None:
    cfg = _config(args)
    tagger = Tagger.from_lexicons(_lexicons(args), cfg)
    for line in _read_lines(args.input):
        sys.stdout.write(tagger.tsv(to_charseq(line)) + "\n")


def cmd_train(args) -> None:
    from .train import TrainConfig, build_model, train_loop, vocab_for_pairs

    cfg = _config(args)
    lex = _lexicons(args, need_freq=bool(args.mlm))
    pairs = _pairs(args.src, args.tgt)
    if args.mlm:
        # the corrector learns from spelling-corrected sources, as at inference time
        lm = _mlm(args.mlm)
        pairs = [(correct_spelling(s, lm, lex.phonetic, lex.freq, cfg)[0], t) for s, t in pairs]
    dev = _pairs(args.dev_src, args.dev_tgt) if args.dev_src else None
    tagger = Tagger.from_lexicons(lex, cfg)
    model = build_model(cfg, vocab_for_pairs(pairs), tagger)
    tcfg = TrainConfig(
        lr=args.lr,
        warmup=args.warmup,
        max_epochs=args.epochs,
        max_tokens=args.max_tokens,
        seed=cfg.seed,
        average_last=args.average,
    )
    out = Path(args.out)
    result = train_loop(model, tagger, pairs, tcfg, out, dev)
    final = average_checkpoints(result.checkpoints[-tcfg.average_last:])
    extra = mlm_to_tensors(_mlm(args.mlm).params) if args.mlm else None
    save_model(final, out / "model.sqmd", extra)


def cmd_correct(args) -> None:
    cfg = _config(args)
    lex = _lexicons(args, need_freq=not args.gec_only)
    model = lm = None
    if not args.sec_only:
        if not args.model:
            raise CgecError("--model is required unless --sec-only is given")
        model = load_model(args.model)
        cfg = cfg.replace(class_levels=model.cfg.class_levels)
    if not args.gec_only:
        lm = _mlm(args.mlm or args.model) if (args.mlm or args.model) else None
    corrector = Corrector(lex, cfg, lm, model, args.sec_only, args.gec_only)
    lines = _read_lines(args.input)

    def run(line):
        return corrector.correct(to_charseq(line))

    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            results = list(pool.map(run, lines))
    else:
        results = [run(line) for line in lines]
    for out, _ in results:
        sys.stdout.write(_join(out) + "\n")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            for _, trace in results:
                fh.write(json.dumps(trace.to_json() if trace else None, ensure_ascii=False) + "\n")


def cmd_score(args) -> None:
    gold = load_m2(args.gold)
    hyps = _read_lines(args.hyp)
    if len(hyps) != len(gold):
        raise CgecError(f"{len(hyps)} hypotheses but {len(gold)} gold sentences")
    score = max_match_corpus([(g.source, to_charseq(h), g.annotations) for g, h in zip(gold, hyps)], args.beta)
    _write(args.out, score.tsv())


def cmd_analyze(args) -> None:
    cfg = _config(args)
    tagger = Tagger.from_lexicons(_lexicons(args), cfg)
    _write(args.out, analyze_corpus(_pairs(args.src, args.tgt), tagger).tsv())


def cmd_sweep_kc(args) -> None:
    cfg = _config(args)
    lex = _lexicons(args, need_freq=True)
    values = [int(v) for v in args.values.split(",")] if args.values else sorted(set(lex.freq.counts.values()) | {0})
    rows = sweep_threshold(_pairs(args.src, args.tgt), _mlm(args.mlm), lex.phonetic, lex.freq, values, cfg)
    _write(args.out, format_sweep(rows))


def cmd_inspect(args) -> None:
    model = load_model(args.model)
    if args.what == "transitions":
        _write(args.out, export_transition_matrix(model))
    elif args.what == "neighbors":
        _write(args.out, format_neighbors(pos_embedding_neighbors(model, args.top_n)))
    else:
        _write(args.out, json.dumps(model.cfg.to_dict(), indent=2, sort_keys=True) + "\n")


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value pipeline configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--pinyin", help="char<TAB>syllables lexicon (default: bundled)")
    common.add_argument("--freq", help="char<TAB>count frequency table")
    common.add_argument("--pos-lex", dest="pos_lex", help="word<TAB>tag lexicon (default: bundled)")
    common.add_argument("--semclass", help="word<TAB>L1/L2/L3 dictionary (default: bundled)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="cgec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help):
        p = sub.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        return p

    p = add("gen", cmd_gen, "write a synthetic corpus: <out>.src, <out>.tgt, <out>.m2")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=100)
    p.add_argument("--templates")
    p.add_argument("--kc", type=int)
    for flag in ("sub", "del", "ins", "order"):
        p.add_argument(f"--{flag}-rate", type=float, default=0.0)

    p = add("freq", cmd_freq, "count characters in a corpus")
    p.add_argument("input", nargs="?")
    p.add_argument("--out")

    p = add("mlm-train", cmd_mlm_train, "fit the n-gram masked language model")
    p.add_argument("input", nargs="?")
    p.add_argument("--out", required=True)

    p = add("sec", cmd_sec, "spelling correction, one sentence per line")
    p.add_argument("input", nargs="?")
    p.add_argument("--mlm", required=True)
    p.add_argument("--kc", type=int)
    p.add_argument("--trace", help="write one JSON decision trace per line here")

    p = add("tag", cmd_tag, "segment and tag, one TSV block per sentence")
    p.add_argument("input", nargs="?")

    p = add("train", cmd_train, "train the corrector and average the last checkpoints")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--dev-src")
    p.add_argument("--dev-tgt")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--mlm", help="spell-correct training sources with this model first")
    p.add_argument("--kc", type=int)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--warmup", type=int, default=50)
    p.add_argument("--max-tokens", type=int, default=1024)
    p.add_argument("--average", type=int, default=5)

    p = add("correct", cmd_correct, "full correction pipeline, one sentence per line")
    p.add_argument("input", nargs="?")
    p.add_argument("--model")
    p.add_argument("--mlm", help="masked LM (default: the one stored in --model)")
    p.add_argument("--kc", type=int)
    p.add_argument("--beam", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--sec-only", action="store_true")
    p.add_argument("--gec-only", action="store_true")
    p.add_argument("--trace")

    p = add("score", cmd_score, "M2 precision, recall and F0.5 against gold edits")
    p.add_argument("--hyp", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--out")

    p = add("analyze", cmd_analyze, "LCS / POS divergence statistics of a parallel corpus")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out")

    p = add("sweep-kc", cmd_sweep_kc, "spelling P/R/F0.5 for a range of k_c thresholds")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--mlm", required=True)
    p.add_argument("--values", help="comma-separated thresholds (default: every distinct count)")
    p.add_argument("--out")

    p = add("inspect", cmd_inspect, "dump CRF transitions, POS neighbours or the config")
    p.add_argument("--model", required=True)
    p.add_argument("--what", choices=("transitions", "neighbors", "config"), default="transitions")
    p.add_argument("--top-n", type=int, default=3)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except OSError as exc:
        print(f"cgec: {exc}", file=sys.stderr)
        return 2
    except (CgecError, ValueError, KeyError) as exc:
        print(f"cgec: {exc}", file=sys.stderr)
        return 1
    return 0
